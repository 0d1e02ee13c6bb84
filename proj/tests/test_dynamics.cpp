#include <cmath>
#include <vector>

#include "doctest.h"
#include "nfl/dynamics.hpp"
#include "nfl/rng.hpp"
#include "nfl/util.hpp"

using namespace nfl;

namespace {

Field random_field(const GridPtr& grid, std::uint64_t seed, double scale = 1.0) {
    Rng rng(seed, 3);
    std::vector<double> v(static_cast<std::size_t>(grid->node_count()));
    for (auto& x : v) x = scale * rng.uniform(-1.0, 1.0);
    return Field(grid, std::move(v));
}

CoefficientPair wobbly_coefficients() {
    CoefficientPair c;
    c.a = Expr::parse("1.5 + 0.5*sin(t)");
    c.b = Expr::parse("0.08 + 0.02*cos(2*t)");
    c.a_minus = 1.0;
    c.a_zero = 2.0;
    c.b_zero = 0.1;
    return c;
}

ModelSpec tanh_model(GridPtr grid) {
    return make_model(grid, Kernel::gaussian(grid, 0.2, 1.0), wobbly_coefficients(),
                      firing_tanh(2.0, 2.0, 1.0, 0.5), stimulus_sinusoid(0.4, 1.0, 0.0), 0.25,
                      2.0);
}

const CertificateReport::Item* find_item(const CertificateReport& rep, const std::string& name) {
    for (const auto& item : rep.items)
        if (item.condition == name) return &item;
    return nullptr;
}

} // namespace

TEST_SUITE("dynamics") {
    TEST_CASE("right-hand side matches a plain weighted double loop") {
        const auto grid = Grid::make(1, {1.0}, {33});
        const std::int64_t n = grid->node_count();
        std::vector<double> J(static_cast<std::size_t>(n * n));
        for (std::int64_t i = 0; i < n; ++i)
            for (std::int64_t j = 0; j < n; ++j) {
                const double xi = grid->coordinate(i)[0];
                const double xj = grid->coordinate(j)[0];
                J[static_cast<std::size_t>(i * n + j)] = 0.8 * std::exp(-(xi - xj) * (xi - xj));
            }
        const ModelSpec m =
            make_model(grid, Kernel::dense(grid, J), wobbly_coefficients(),
                       firing_tanh(2.0, 2.0, 1.0, 0.5),
                       stimulus_gaussian_bump(0.6, 0.5, 0.0, 0.2), 0.25, 2.0);
        const Field u = random_field(grid, 21, 2.0);

        for (double t : {0.0, 0.9, 3.7}) {
            const Field got = rhs_F(m, t, u);
            const double a = m.coeff.a(t);
            const double b = m.coeff.b(t);
            for (std::int64_t i = 0; i < n; ++i) {
                double conv = 0.0;
                for (std::int64_t j = 0; j < n; ++j)
                    conv += grid->weight(j) * J[static_cast<std::size_t>(i * n + j)] *
                            m.fire.f(t, u[j]);
                const auto xy = grid->coordinate(i);
                const double want = -a * u[i] + b * conv - m.h + m.stim.S(t, xy[0], xy[1]);
                CHECK(std::abs(got[i] - want) < 1e-12);
            }
        }
    }

    TEST_CASE("stimulus enters affinely") {
        const auto grid = Grid::make(1, {1.0}, {65});
        ModelSpec with = tanh_model(grid);
        ModelSpec without = tanh_model(grid);
        without.stim = stimulus_zero();
        const Field u = random_field(grid, 22, 3.0);
        const double t = 1.3;
        const Field fw = rhs_F(with, t, u);
        const Field fo = rhs_F(without, t, u);
        const Field s = with.stim.sample(grid, t);
        for (std::int64_t i = 0; i < grid->node_count(); ++i)
            CHECK(std::abs(fw[i] - fo[i] - s[i]) < 1e-12);
    }

    TEST_CASE("growth certificate integrates to an L1 bound") {
        const auto grid = Grid::make(1, {2.0}, {129});
        for (const FiringRate& fire :
             {firing_tanh(2.0, 2.0, 1.0, 0.5), firing_cubic(3.0), firing_power_sigmoid(2.0)}) {
            for (std::uint64_t seed : {31u, 32u, 33u}) {
                const Field u = random_field(grid, seed, 4.0);
                for (double t : {0.0, 2.0}) {
                    KahanSum lhs;
                    for (std::int64_t i = 0; i < grid->node_count(); ++i)
                        lhs.add(grid->weight(i) * std::abs(fire.f(t, u[i])));
                    const double rhs =
                        fire.C1(t) *
                        (grid->volume() + std::pow(lp_norm(u, fire.p), fire.p));
                    CHECK(lhs.value() <= rhs * (1.0 + 1e-12));
                }
            }
        }
    }

    TEST_CASE("difference quotients stay under the certified majorant") {
        const auto grid = Grid::make(1, {1.0}, {65});
        const ModelSpec m = tanh_model(grid);
        Rng rng(404, 1);
        for (int k = 0; k < 200; ++k) {
            const double t = rng.uniform(0.0, 10.0);
            const double scale = rng.uniform(0.1, 5.0);
            const Field u = random_field(grid, 1000 + static_cast<std::uint64_t>(k), scale);
            const Field v = random_field(grid, 2000 + static_cast<std::uint64_t>(k), scale);
            const double gap = lp_distance(rhs_F(m, t, u), rhs_F(m, t, v), m.p);
            const double bound =
                lipschitz_majorant(m, t, lp_norm(u, m.p), lp_norm(v, m.p)) *
                lp_distance(u, v, m.p);
            CHECK(gap <= bound * (1.0 + 1e-12));
        }
    }

    TEST_CASE("derivative is linear in the direction") {
        const auto grid = Grid::make(1, {1.0}, {65});
        const ModelSpec m = tanh_model(grid);
        const Field u = random_field(grid, 41, 2.0);
        const Field v = random_field(grid, 42);
        const Field w = random_field(grid, 43);
        const double alpha = 1.7;
        const double beta = -0.3;
        Field combo(grid);
        for (std::int64_t i = 0; i < grid->node_count(); ++i)
            combo[i] = alpha * v[i] + beta * w[i];
        const Field lhs = frechet_derivative(m, 0.7, u, combo);
        const Field dv = frechet_derivative(m, 0.7, u, v);
        const Field dw = frechet_derivative(m, 0.7, u, w);
        for (std::int64_t i = 0; i < grid->node_count(); ++i)
            CHECK(std::abs(lhs[i] - alpha * dv[i] - beta * dw[i]) < 1e-12);
    }

    TEST_CASE("derivative matches central finite differences") {
        const auto grid = Grid::make(1, {1.0}, {65});
        const ModelSpec m = tanh_model(grid);
        const Field u = random_field(grid, 51, 2.0);
        const Field v = random_field(grid, 52);
        const double t = 1.1;
        const double eps = 1e-5;
        Field up(grid);
        Field dn(grid);
        for (std::int64_t i = 0; i < grid->node_count(); ++i) {
            up[i] = u[i] + eps * v[i];
            dn[i] = u[i] - eps * v[i];
        }
        const Field fu = rhs_F(m, t, up);
        const Field fd = rhs_F(m, t, dn);
        const Field dfv = frechet_derivative(m, t, u, v);
        Field fdq(grid);
        for (std::int64_t i = 0; i < grid->node_count(); ++i)
            fdq[i] = (fu[i] - fd[i]) / (2.0 * eps);
        CHECK(lp_distance(fdq, dfv, 2.0) < 1e-7 * (1.0 + lp_norm(dfv, 2.0)));
    }

    TEST_CASE("derivative varies continuously with the base point") {
        const auto grid = Grid::make(1, {1.0}, {65});
        const ModelSpec m = tanh_model(grid);
        const Field u = random_field(grid, 61, 1.5);
        const Field z = random_field(grid, 62);
        const Field v = random_field(grid, 63);
        const Field base = frechet_derivative(m, 0.4, u, v);
        double prev = 0.0;
        for (int level = 0; level < 3; ++level) {
            const double d = 1e-3 / static_cast<double>(1 << level);
            Field shifted(grid);
            for (std::int64_t i = 0; i < grid->node_count(); ++i)
                shifted[i] = u[i] + d * z[i];
            const double gap = lp_distance(frechet_derivative(m, 0.4, shifted, v), base, 2.0);
            CHECK(gap > 0.0);
            if (level > 0) {
                const double ratio = gap / prev;
                CHECK(ratio > 0.45);
                CHECK(ratio < 0.55);
            }
            prev = gap;
        }
    }

    TEST_CASE("linear growth estimation") {
        const FiringRate tanh_fire = firing_tanh(2.0, 2.0, 1.0, 0.5);
        const double est = estimate_k1(tanh_fire, 0.0, 1.0, 1e3, 400);
        CHECK(est <= 1.0);
        CHECK(est >= std::tanh(2.0) - 1e-9);

        const FiringRate half = firing_linear(2.0, 0.5, 0.0);
        CHECK(estimate_k1(half, 0.0, 1.0, 100.0, 50) == doctest::Approx(0.5).epsilon(1e-15));

        FiringRate wavy = half;
        wavy.f = [](double, double x) { return 0.5 * x + std::sin(x); };
        const double est_wavy = estimate_k1(wavy, 0.0, 10.0, 1e4, 2000);
        CHECK(est_wavy >= 0.49);
        CHECK(est_wavy <= 0.6);

        CHECK_THROWS_AS(estimate_k1(half, 0.0, 0.5, 10.0, 50), config_error);
        CHECK_THROWS_AS(estimate_k1(half, 0.0, 2.0, 1.0, 50), config_error);
        CHECK_THROWS_AS(estimate_k1(half, 0.0, 1.0, 10.0, 1), config_error);
    }

    TEST_CASE("certificate report covers every condition in order") {
        const auto grid = Grid::make(1, {1.0}, {33});
        const ModelSpec m = tanh_model(grid);
        const auto rep = validate_certificates(m, 0.0, 5.0);
        REQUIRE(rep.items.size() == 7);
        CHECK(rep.items[0].condition == "coefficient_bounds");
        CHECK(rep.items[1].condition == "Cf1");
        CHECK(rep.items[2].condition == "Cf2");
        CHECK(rep.items[3].condition == "Condf");
        CHECK(rep.items[4].condition == "dissip2");
        CHECK(rep.items[5].condition == "monotone_majorants");
        CHECK(rep.items[6].condition == "stimulus_norm");
        CHECK(rep.all_pass);
        CHECK(rep.first_failure() == nullptr);
    }

    TEST_CASE("quadratic rate with unit growth constant satisfies Cf1 at p = 2") {
        const auto grid = Grid::make(1, {1.0}, {17});
        FiringRate square;
        square.name = "square";
        square.p = 2.0;
        square.f = [](double, double x) { return x * x; };
        square.C1 = Expr::constant(1.0);
        square.C2 = Expr::constant(1.0);
        square.k2 = Expr::constant(0.0);
        square.k1 = 0.0;
        const ModelSpec m = make_model(grid, Kernel::constant(grid, 1.0), wobbly_coefficients(),
                                       square, stimulus_zero(), 0.0, 2.0);
        const auto rep = validate_certificates(m, 0.0, 1.0);
        const auto* cf1 = find_item(rep, "Cf1");
        REQUIRE(cf1 != nullptr);
        CHECK(cf1->pass);
        CHECK(cf1->margin >= 0.0);
        CHECK(find_item(rep, "Condf") == nullptr);
        // x^2 grows faster than any line, so the dissipativity claim with
        // k1 = 0, k2 = 0 must be falsified, not skipped.
        const auto* dissip = find_item(rep, "dissip2");
        REQUIRE(dissip != nullptr);
        CHECK(!dissip->pass);
    }

    TEST_CASE("cubic rate breaks Cf1 at p = 2 with a large witness") {
        const auto grid = Grid::make(1, {1.0}, {17});
        FiringRate cube = firing_cubic(2.0);
        cube.C1 = Expr::constant(1.0);
        const ModelSpec m = make_model(grid, Kernel::constant(grid, 1.0), wobbly_coefficients(),
                                       cube, stimulus_zero(), 0.0, 2.0);
        const auto rep = validate_certificates(m, 0.0, 1.0);
        CHECK(!rep.all_pass);
        const auto* cf1 = find_item(rep, "Cf1");
        REQUIRE(cf1 != nullptr);
        CHECK(!cf1->pass);
        CHECK(cf1->margin < 0.0);
        CHECK(std::abs(cf1->witness_x) >= 2.0);
        REQUIRE(rep.first_failure() != nullptr);
        CHECK(rep.first_failure()->condition == "Cf1");
    }

    TEST_CASE("model assembly rejects mismatched pieces") {
        const auto grid = Grid::make(1, {1.0}, {17});
        const auto other = Grid::make(1, {1.0}, {19});
        CHECK_THROWS_AS(make_model(grid, Kernel(), wobbly_coefficients(),
                                   firing_tanh(2.0, 1.0, 1.0, 0.5), stimulus_zero(), 0.0, 2.0),
                        config_error);
        CHECK_THROWS_AS(make_model(grid, Kernel::constant(other, 1.0), wobbly_coefficients(),
                                   firing_tanh(2.0, 1.0, 1.0, 0.5), stimulus_zero(), 0.0, 2.0),
                        config_error);
        CHECK_THROWS_AS(make_model(grid, Kernel::constant(grid, 1.0), wobbly_coefficients(),
                                   firing_tanh(3.0, 1.0, 1.0, 0.5), stimulus_zero(), 0.0, 2.0),
                        config_error);
        CHECK_THROWS_AS(make_model(grid, Kernel::constant(grid, 1.0), wobbly_coefficients(),
                                   firing_tanh(2.0, 1.0, 1.0, 0.5), stimulus_zero(), -1.0, 2.0),
                        config_error);
    }

    TEST_CASE("coefficient bound violations carry a witness time") {
        CoefficientPair c = wobbly_coefficients();
        c.a_minus = 1.2;  // a(t) dips to 1.0
        CHECK_THROWS_AS(c.validate(0.0, 10.0), check_failure);
        c = wobbly_coefficients();
        CHECK_NOTHROW(c.validate(0.0, 10.0));
        c.b_zero = 0.09;  // b(t) peaks at 0.1
        CHECK_THROWS_AS(c.validate(0.0, 10.0), check_failure);
    }
}
