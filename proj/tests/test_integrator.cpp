#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "nfl/integrator.hpp"
#include "nfl/util.hpp"

using namespace nfl;

namespace {

// Adaptive Simpson, the classic recursive form. Independent of the
// Gauss-Legendre panels under test.
double simpson(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b);
    return (b - a) / 6.0 * (f(a) + 4.0 * f(c) + f(b));
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double whole,
                        double tol, int depth) {
    const double c = 0.5 * (a + b);
    const double left = simpson(f, a, c);
    const double right = simpson(f, c, b);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, a, c, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, c, b, right, 0.5 * tol, depth - 1);
}

double integral_oracle(const std::function<double(double)>& f, double a, double b) {
    return adaptive_simpson(f, a, b, simpson(f, a, b), 1e-13, 40);
}

CoefficientPair unit_coefficients() {
    CoefficientPair c;
    c.a = Expr::constant(1.0);
    c.b = Expr::constant(1.0);
    c.a_minus = 1.0;
    c.a_zero = 1.0;
    c.b_zero = 1.0;
    return c;
}

// Mean-field contraction specimen: on the unit interval with a flat unit
// kernel and half-slope firing, every constant state relaxes to 2.
ModelSpec contraction_model(GridPtr grid) {
    return make_model(grid, Kernel::constant(grid, 1.0), unit_coefficients(),
                      firing_linear(2.0, 0.5, 0.0), stimulus_constant(1.0), 0.0, 2.0);
}

ModelSpec wobbly_tanh_model(GridPtr grid) {
    CoefficientPair c;
    c.a = Expr::parse("1.5 + 0.5*sin(t)");
    c.b = Expr::parse("0.08 + 0.02*cos(2*t)");
    c.a_minus = 1.0;
    c.a_zero = 2.0;
    c.b_zero = 0.1;
    return make_model(grid, Kernel::gaussian(grid, 0.2, 1.0), c,
                      firing_tanh(2.0, 2.0, 1.0, 0.5), stimulus_sinusoid(0.4, 1.0, 0.0), 0.0,
                      2.0);
}

} // namespace

TEST_SUITE("integrator") {
    TEST_CASE("panel quadrature nails a closed form") {
        const double pi = std::acos(-1.0);
        CHECK(std::abs(integrate_expr(Expr::parse("2 + sin(t)"), 0.0, pi) - (2.0 * pi + 2.0)) <
              1e-10);
        CHECK(integrate_expr(Expr::constant(3.0), 1.0, 1.0) == 0.0);
        CHECK_THROWS_AS(integrate_expr(Expr::constant(1.0), 1.0, 0.0), config_error);
    }

    TEST_CASE("accumulated decay matches an adaptive simpson oracle") {
        const Expr a = Expr::parse("2 + sin(3*t)*exp(-t/10)");
        const auto fn = [&](double t) { return a(t); };
        DecayAccumulator acc(a);
        for (auto [lo, hi] : std::vector<std::pair<double, double>>{
                 {0.0, 0.5}, {0.3, 7.9}, {2.0, 2.013}, {0.0, 40.0}}) {
            CHECK(std::abs(acc.between(lo, hi) - integral_oracle(fn, lo, hi)) < 1e-9);
        }
        CHECK(acc.between(1.0, 1.0) == 0.0);
        CHECK_THROWS_AS(acc.between(2.0, 1.0), config_error);
    }

    TEST_CASE("constant decay takes the exact shortcut") {
        DecayAccumulator acc(Expr::parse("3"));
        CHECK(acc.between(1.25, 7.75) == 3.0 * 6.5);
    }

    TEST_CASE("decay outside the certified band is a check failure") {
        const Expr a = Expr::parse("2 + sin(3*t)*exp(-t/10)");
        CHECK_NOTHROW(DecayAccumulator(a, 1.0, 3.0).between(0.0, 0.5));
        CHECK_THROWS_AS(DecayAccumulator(a, 2.9, 4.0).between(0.0, 0.5), check_failure);
        CHECK_THROWS_AS(DecayAccumulator(a, 1.0, 2.2).between(0.0, 0.5), check_failure);
    }

    TEST_CASE("one pure-decay step is exact for the exponential scheme") {
        const auto grid = Grid::make(1, {1.0}, {17});
        const ModelSpec m = make_model(grid, Kernel::constant(grid, 1.0), unit_coefficients(),
                                       firing_zero(2.0), stimulus_zero(), 0.0, 2.0);
        std::vector<double> vals(17);
        for (std::size_t i = 0; i < vals.size(); ++i)
            vals[i] = 0.3 + 0.1 * static_cast<double>(i);
        const Field u(grid, vals);

        const ProcessHandle he = make_process(m, Scheme::exponential_euler, 0.01);
        const Field stepped = step_once(he, 0.0, u, 0.01);
        const double factor = std::exp(-0.01);
        for (std::int64_t i = 0; i < 17; ++i)
            CHECK(std::abs(stepped[i] - factor * u[i]) <= 1e-15 * std::abs(u[i]));

        const ProcessHandle hr = make_process(m, Scheme::rk4, 0.01);
        const Field stepped_rk = step_once(hr, 0.0, u, 0.01);
        for (std::int64_t i = 0; i < 17; ++i)
            CHECK(std::abs(stepped_rk[i] - factor * u[i]) < 1e-10);
    }

    TEST_CASE("mean-field contraction reaches its fixed point") {
        const auto grid = Grid::make(1, {1.0}, {33});
        const ProcessHandle h =
            make_process(contraction_model(grid), Scheme::exponential_euler, 0.01);
        const Field u0(grid);
        const Field uT = evolve_final(h, 0.0, 30.0, u0);
        for (std::int64_t i = 0; i < grid->node_count(); ++i)
            CHECK(std::abs(uT[i] - 2.0) < 1e-5);
    }

    TEST_CASE("convergence orders under step halving") {
        const auto grid = Grid::make(1, {1.0}, {33});
        const ModelSpec m = wobbly_tanh_model(grid);
        std::vector<double> vals(33);
        for (std::size_t i = 0; i < vals.size(); ++i)
            vals[i] = std::sin(2.0 * static_cast<double>(i));
        const Field u0(grid, vals);
        const double T = 2.0;

        const auto final_with = [&](Scheme s, double dt) {
            return evolve_final(make_process(m, s, dt), 0.0, T, u0);
        };

        {
            const Field ref = final_with(Scheme::rk4, 0.04 / 16.0);
            const double e1 = lp_distance(final_with(Scheme::exponential_euler, 0.04), ref, 2.0);
            const double e2 = lp_distance(final_with(Scheme::exponential_euler, 0.02), ref, 2.0);
            const double ratio = e1 / e2;
            CHECK(ratio > 1.7);
            CHECK(ratio < 2.3);
        }
        {
            const Field ref = final_with(Scheme::rk4, 0.08 / 16.0);
            const double e1 = lp_distance(final_with(Scheme::rk4, 0.08), ref, 2.0);
            const double e2 = lp_distance(final_with(Scheme::rk4, 0.04), ref, 2.0);
            const double ratio = e1 / e2;
            CHECK(ratio > 12.8);
            CHECK(ratio < 19.2);
        }
    }

    TEST_CASE("evolution composes across an intermediate time") {
        const auto grid = Grid::make(1, {1.0}, {33});
        const ProcessHandle h = make_process(wobbly_tanh_model(grid), Scheme::exponential_euler,
                                             0.01);
        const Field u0(grid, std::vector<double>(33, 0.7));
        const Field direct = evolve_final(h, 0.0, 2.0, u0);
        const Field two_leg = evolve_final(h, 1.0, 2.0, evolve_final(h, 0.0, 1.0, u0));
        CHECK(lp_distance(direct, two_leg, 2.0) < 1e-7);
    }

    TEST_CASE("trajectory stores the requested stamps") {
        const auto grid = Grid::make(1, {1.0}, {33});
        const ProcessHandle h =
            make_process(contraction_model(grid), Scheme::exponential_euler, 0.01);
        const Trajectory traj = evolve(h, 0.0, 1.0, Field(grid), 10);
        REQUIRE(traj.times.size() == 11);
        CHECK(traj.times.front() == 0.0);
        CHECK(traj.times.back() == 1.0);
        CHECK(traj.norms.size() == traj.fields.size());
    }

    TEST_CASE("norm blow-up aborts the run") {
        const auto grid = Grid::make(1, {1.0}, {33});
        CoefficientPair c;
        c.a = Expr::constant(0.1);
        c.b = Expr::constant(1.0);
        c.a_minus = 0.1;
        c.a_zero = 0.1;
        c.b_zero = 1.0;
        const ModelSpec m = make_model(grid, Kernel::constant(grid, 1.0), c,
                                       firing_linear(2.0, 5.0, 0.0), stimulus_zero(), 0.0, 2.0);
        const ProcessHandle h = make_process(m, Scheme::exponential_euler, 0.01);
        const Field u0(grid, std::vector<double>(33, 1.0));
        CHECK_THROWS_AS(evolve_final(h, 0.0, 10.0, u0), check_failure);
    }

    TEST_CASE("scheme names round trip") {
        CHECK(scheme_from_string("rk4") == Scheme::rk4);
        CHECK(scheme_from_string("exponential_euler") == Scheme::exponential_euler);
        CHECK(scheme_name(Scheme::rk4) == "rk4");
        CHECK_THROWS_AS(scheme_from_string("euler"), config_error);
        CHECK_THROWS_AS(make_process(contraction_model(Grid::make(1, {1.0}, {9})),
                                     Scheme::rk4, 0.0),
                        config_error);
    }
}
