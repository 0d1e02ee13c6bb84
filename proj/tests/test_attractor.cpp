#include <cmath>
#include <vector>

#include "doctest.h"
#include "nfl/attractor.hpp"
#include "nfl/rng.hpp"
#include "nfl/util.hpp"

using namespace nfl;

namespace {

Field constant_field(const GridPtr& grid, double value) {
    return Field(grid, std::vector<double>(static_cast<std::size_t>(grid->node_count()), value));
}

Field random_field(const GridPtr& grid, std::uint64_t seed) {
    Rng rng(seed, 5);
    std::vector<double> v(static_cast<std::size_t>(grid->node_count()));
    for (auto& x : v) x = rng.uniform(-2.0, 2.0);
    return Field(grid, std::move(v));
}

CoefficientPair constant_coefficients(double a, double b) {
    CoefficientPair c;
    c.a = Expr::constant(a);
    c.b = Expr::constant(b);
    c.a_minus = a;
    c.a_zero = a;
    c.b_zero = b;
    return c;
}

// Flat kernel, half-slope firing with unit dissipation offset, unit input:
// epsilon = 1/2 and every radius constant is a small rational.
ModelSpec rational_radius_model(GridPtr grid) {
    return make_model(grid, Kernel::constant(grid, 1.0), constant_coefficients(1.0, 1.0),
                      firing_linear(2.0, 0.5, 1.0), stimulus_zero(), 0.0, 2.0);
}

} // namespace

TEST_SUITE("attractor") {
    TEST_CASE("absorbing radius reproduces the hand substitution") {
        // a_- = 1, k1 = 1/2, b0 = 1, k2 = 1, |Omega| = 1, p = 2, S = 0,
        // delta = 1: epsilon = 1/2 and R = 2/epsilon * 1 = 4.
        const auto grid = Grid::make(1, {1.0}, {33});
        const ModelSpec m = rational_radius_model(grid);
        const DissipationBudget budget = make_budget(m, 1.0);
        CHECK(budget.epsilon() == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(budget.time_constant);
        CHECK(absorbing_radius(budget, 0.0) == doctest::Approx(4.0).epsilon(1e-14));
        CHECK(absorbing_radius(budget, 17.0) == doctest::Approx(4.0).epsilon(1e-14));
    }

    TEST_CASE("absorbing radius grows with delta, k2, and the stimulus") {
        const auto grid = Grid::make(1, {1.0}, {33});
        const ModelSpec m = rational_radius_model(grid);
        const double base = absorbing_radius(make_budget(m, 1.0), 0.0);
        CHECK(absorbing_radius(make_budget(m, 2.0), 0.0) > base);

        ModelSpec bigger_k2 = m;
        bigger_k2.fire.k2 = Expr::constant(2.0);
        CHECK(absorbing_radius(make_budget(bigger_k2, 1.0), 0.0) > base);

        ModelSpec with_stim = m;
        with_stim.stim = stimulus_constant(0.7);
        CHECK(absorbing_radius(make_budget(with_stim, 1.0), 0.0) > base);

        ModelSpec gated = m;
        gated.fire.k1 = 1.5;  // k1 b0 = 1.5 >= a_minus
        CHECK_THROWS_AS(absorbing_radius(make_budget(gated, 1.0), 0.0), config_error);
    }

    TEST_CASE("semidistance agrees with a brute-force double loop") {
        const auto grid = Grid::make(1, {1.0}, {17});

        const std::vector<Field> zero = {constant_field(grid, 0.0)};
        const std::vector<Field> pair = {constant_field(grid, 1.0), constant_field(grid, 3.0)};
        CHECK(hausdorff_semidist(zero, pair, 2.0) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(hausdorff_semidist(pair, zero, 2.0) == doctest::Approx(3.0).epsilon(1e-14));

        std::vector<Field> a;
        std::vector<Field> b;
        for (std::uint64_t k = 0; k < 5; ++k) a.push_back(random_field(grid, 100 + k));
        for (std::uint64_t k = 0; k < 7; ++k) b.push_back(random_field(grid, 200 + k));
        double brute = 0.0;
        for (const Field& u : a) {
            double best = std::numeric_limits<double>::infinity();
            for (const Field& v : b) best = std::min(best, lp_distance(u, v, 2.0));
            brute = std::max(brute, best);
        }
        CHECK(hausdorff_semidist(a, b, 2.0) == brute);
        CHECK(hausdorff_semidist(a, a, 2.0) == 0.0);

        std::vector<Field> c;
        for (std::uint64_t k = 0; k < 4; ++k) c.push_back(random_field(grid, 300 + k));
        CHECK(hausdorff_semidist(a, c, 2.0) <=
              (hausdorff_semidist(a, b, 2.0) + hausdorff_semidist(b, c, 2.0)) * (1.0 + 1e-12));

        CHECK_THROWS_AS(hausdorff_semidist({}, a, 2.0), config_error);
    }

    TEST_CASE("decay envelope holds from far outside the ball") {
        const auto grid = Grid::make(1, {1.0}, {33});
        const ModelSpec m =
            make_model(grid, Kernel::gaussian(grid, 0.2, 1.0), constant_coefficients(2.0, 0.1),
                       firing_tanh(2.0, 2.0, 1.0, 0.5), stimulus_constant(0.5), 0.0, 2.0);
        const DissipationBudget budget = make_budget(m, 1.0);
        REQUIRE(budget.epsilon() > 0.0);
        REQUIRE(budget.time_constant);

        const ProcessHandle h = make_process(m, Scheme::exponential_euler, 0.01);
        const Field u0 = constant_field(grid, 50.0);  // norm 50, far outside
        const EnvelopeReport rep = decay_envelope_check(h, budget, 0.0, 8.0, u0);
        CHECK(rep.pass);
        CHECK(rep.entered);
        CHECK(!rep.re_exited);
        CHECK(rep.min_margin > 0.0);
        CHECK(rep.entry_time > 0.0);
        CHECK(rep.entry_time < 8.0);
        REQUIRE(!rep.rows.empty());
        CHECK(rep.rows.front().outside);
        CHECK(!rep.rows.back().outside);
    }

    TEST_CASE("section gaps collapse once horizons outlast the transient") {
        // Mean-field contraction toward the constant state 2 at rate 1/2:
        // at horizons 30/40/50 consecutive sections differ by ~exp(-20).
        const auto grid = Grid::make(1, {1.0}, {33});
        const ModelSpec m = make_model(grid, Kernel::constant(grid, 1.0),
                                       constant_coefficients(1.0, 1.0),
                                       firing_linear(2.0, 0.5, 0.0), stimulus_constant(1.0), 0.0,
                                       2.0);
        const DissipationBudget budget = make_budget(m, 1.0);
        const ProcessHandle h = make_process(m, Scheme::exponential_euler, 0.01);
        const AttractorSection section =
            sample_attractor_section(h, budget, 40.0, {30.0, 40.0, 50.0}, 16, 7);
        CHECK(section.last_gap <= 1e-6);
        CHECK(section.gaps_nonincreasing);
        CHECK(section.contained);
        CHECK(section.converged);
        REQUIRE(!section.members.empty());
        // every surviving member sits on the fixed point
        for (const Field& u : section.members)
            for (std::int64_t i = 0; i < grid->node_count(); ++i)
                CHECK(std::abs(u[i] - 2.0) < 1e-6);
    }

    TEST_CASE("stimulus gap obeys the closed-form response of a linear model") {
        // f = 0 decouples the nodes: under S and S0 = S - c the trajectories
        // differ by c (1 - exp(-a (t - tau))) / a exactly.
        const auto grid = Grid::make(1, {1.0}, {33});
        const double a = 1.5;
        const ModelSpec m = make_model(grid, Kernel::gaussian(grid, 0.2, 1.0),
                                       constant_coefficients(a, 1.0), firing_zero(2.0),
                                       stimulus_zero(), 0.0, 2.0);
        const ProcessHandle h = make_process(m, Scheme::exponential_euler, 0.01);
        const double c = 0.25;
        const double T = 4.0;
        const ContinuityReport rep =
            continuity_gap(h, stimulus_constant(c), stimulus_zero(), 0.0, T, random_field(grid, 9));
        CHECK(rep.pass);
        CHECK(rep.min_margin >= 0.0);
        REQUIRE(!rep.rows.empty());
        const double want = c * (1.0 - std::exp(-a * T)) / a;
        CHECK(std::abs(rep.rows.back().gap - want) < 1e-8);
        CHECK(rep.stimulus_gap == doctest::Approx(c).epsilon(1e-12));
        for (const auto& row : rep.rows) CHECK(row.gap <= row.majorant * (1.0 + 1e-12));
    }

    TEST_CASE("section distance shrinks linearly with the perturbation level") {
        // f = 0, flat stimulus: the perturbed section sits exactly
        // c (1 - exp(-H)) from the baseline.
        const auto grid = Grid::make(1, {1.0}, {33});
        const ModelSpec m = make_model(grid, Kernel::constant(grid, 1.0),
                                       constant_coefficients(1.0, 1.0), firing_zero(2.0),
                                       stimulus_constant(1.0), 0.0, 2.0);
        const ProcessHandle h = make_process(m, Scheme::exponential_euler, 0.01);
        const double H = 20.0;
        const std::vector<double> levels = {0.2, 0.1, 0.05, 0.0125};
        const SemicontinuityReport rep =
            upper_semicontinuity_curve(h, stimulus_constant(1.0), 20.0, levels, 1.0, H, 8, 13);
        CHECK(rep.pass);
        CHECK(rep.monotone);
        CHECK(rep.contracted);
        REQUIRE(rep.rows.size() == levels.size());
        for (std::size_t i = 0; i < levels.size(); ++i) {
            const double want = levels[i] * (1.0 - std::exp(-H));
            CHECK(std::abs(rep.rows[i].distance - want) < 1e-7);
        }
    }
}
