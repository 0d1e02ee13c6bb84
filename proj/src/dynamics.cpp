#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "nfl/csv.hpp"
#include "nfl/dynamics.hpp"
#include "nfl/rng.hpp"
#include "nfl/util.hpp"

namespace nfl {

namespace {

std::vector<double> linspace(double t0, double t1, int n) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(std::max(n, 1)));
    if (n <= 1) {
        out.push_back(t0);
        return out;
    }
    for (int i = 0; i < n; ++i)
        out.push_back(t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(n - 1));
    return out;
}

Field finite_field(const GridPtr& grid, std::vector<double> vals, const char* what, double t) {
    for (std::size_t i = 0; i < vals.size(); ++i) {
        if (!std::isfinite(vals[i]))
            throw check_failure(std::string(what) + " non-finite at node " + std::to_string(i) +
                                ", t = " + format_double(t));
    }
    return Field(grid, std::move(vals));
}

} // namespace

void CoefficientPair::validate(double t0, double t1, int samples) const {
    if (!(a_minus > 0.0) || !(a_zero >= a_minus) || !std::isfinite(a_zero))
        throw config_error("certified bounds must satisfy 0 < a_minus <= a_zero < infinity");
    if (!(b_zero > 0.0) || !std::isfinite(b_zero))
        throw config_error("certified bound must satisfy 0 < b_zero < infinity");
    if (samples < 2) throw config_error("coefficient validation needs at least 2 samples");
    for (double t : linspace(t0, t1, samples)) {
        const double av = a(t);
        const double bv = b(t);
        if (!std::isfinite(av) || !std::isfinite(bv))
            throw check_failure("coefficient non-finite at t = " + format_double(t));
        if (av < a_minus)
            throw check_failure("a(t) = " + format_double(av) + " below certified a_minus = " +
                                format_double(a_minus) + " at t = " + format_double(t));
        if (av > a_zero)
            throw check_failure("a(t) = " + format_double(av) + " above certified a_zero = " +
                                format_double(a_zero) + " at t = " + format_double(t));
        if (!(bv > 0.0))
            throw check_failure("b(t) = " + format_double(bv) +
                                " not positive at t = " + format_double(t));
        if (bv > b_zero)
            throw check_failure("b(t) = " + format_double(bv) + " above certified b_zero = " +
                                format_double(b_zero) + " at t = " + format_double(t));
    }
}

ModelSpec make_model(GridPtr grid, Kernel kernel, CoefficientPair coeff, FiringRate fire,
                     Stimulus stim, double h, double p) {
    if (!grid) throw config_error("model needs a grid");
    if (!kernel.grid() || !kernel.grid()->same_layout(*grid))
        throw config_error("kernel grid does not match the model grid");
    if (!(h >= 0.0) || !std::isfinite(h))
        throw config_error("threshold h must be finite and >= 0");
    if (!std::isfinite(p) || p < 1.0) throw config_error("exponent p must be finite and >= 1");
    if (fire.p != p)
        throw config_error("firing rate certificates are for p = " + format_double(fire.p) +
                           " but the model uses p = " + format_double(p));
    if (!fire.f) throw config_error("firing rate has no function");
    if (!(fire.k1 >= 0.0)) throw config_error("certified k1 must be >= 0");
    if (!stim.S) throw config_error("stimulus has no function");
    return ModelSpec{std::move(grid), std::move(kernel), std::move(coeff), std::move(fire),
                     std::move(stim), h, p};
}

Field rhs_F(const ModelSpec& m, double t, const Field& u) {
    if (!u.grid()->same_layout(*m.grid))
        throw config_error("field grid does not match the model grid");
    const double a = m.coeff.a(t);
    const double b = m.coeff.b(t);
    if (!std::isfinite(a) || !std::isfinite(b))
        throw check_failure("coefficient non-finite at t = " + format_double(t));
    const std::int64_t n = m.grid->node_count();
    std::vector<double> fired(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i)
        fired[static_cast<std::size_t>(i)] = m.fire.f(t, u[i]);
    const Field coupled =
        m.kernel.apply(finite_field(m.grid, std::move(fired), "firing rate", t));
    const Field stim = m.stim.sample(m.grid, t);
    std::vector<double> out(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] = -a * u[i] + b * coupled[i] - m.h + stim[i];
    return finite_field(m.grid, std::move(out), "right-hand side", t);
}

double lipschitz_majorant(const ModelSpec& m, double t, double rho_u, double rho_v) {
    if (!(rho_u >= 0.0) || !(rho_v >= 0.0)) throw config_error("radii must be >= 0");
    const double q = conjugate_exponent(m.p);
    const double vol_term = pow_or_one(m.grid->volume(), 1.0 / q);
    const double ru = pow_or_one(rho_u, m.p / q);
    const double rv = pow_or_one(rho_v, m.p / q);
    return m.coeff.a_zero +
           m.coeff.b_zero * m.fire.C2(t) * m.kernel.norm(m.p) * (vol_term + ru + rv);
}

Field frechet_derivative(const ModelSpec& m, double t, const Field& u, const Field& v) {
    if (!m.fire.dfdx)
        throw config_error("derivative unavailable for firing rate '" + m.fire.name + "'");
    if (!u.grid()->same_layout(*m.grid) || !v.grid()->same_layout(*m.grid))
        throw config_error("field grid does not match the model grid");
    const double a = m.coeff.a(t);
    const double b = m.coeff.b(t);
    const std::int64_t n = m.grid->node_count();
    std::vector<double> scaled(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i)
        scaled[static_cast<std::size_t>(i)] = m.fire.dfdx(t, u[i]) * v[i];
    const Field coupled =
        m.kernel.apply(finite_field(m.grid, std::move(scaled), "firing rate derivative", t));
    std::vector<double> out(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] = -a * v[i] + b * coupled[i];
    return finite_field(m.grid, std::move(out), "derivative image", t);
}

double estimate_k1(const FiringRate& fire, double t, double x_lo, double x_hi, int samples) {
    if (!(x_lo >= 1.0)) throw config_error("estimate_k1 needs x_lo >= 1");
    if (!(x_hi > x_lo)) throw config_error("estimate_k1 needs x_hi > x_lo");
    if (samples < 2) throw config_error("estimate_k1 needs at least 2 samples");
    const double ratio = x_hi / x_lo;
    double best = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double x =
            x_lo * std::pow(ratio, static_cast<double>(i) / static_cast<double>(samples - 1));
        best = std::max(best, std::abs(fire.f(t, x)) / x);
        best = std::max(best, std::abs(fire.f(t, -x)) / x);
    }
    return best;
}

const CertificateReport::Item* CertificateReport::first_failure() const {
    for (const auto& item : items)
        if (!item.pass) return &item;
    return nullptr;
}

namespace {

struct ItemBuilder {
    CertificateReport::Item item;

    explicit ItemBuilder(std::string condition) {
        item.condition = std::move(condition);
        item.margin = std::numeric_limits<double>::infinity();
    }

    void observe(double margin, double t, double x = 0.0, double y = 0.0) {
        if (!std::isfinite(margin)) margin = -std::numeric_limits<double>::infinity();
        if (margin < item.margin) {
            item.margin = margin;
            item.witness_t = t;
            item.witness_x = x;
            item.witness_y = y;
        }
    }

    CertificateReport::Item finish() {
        if (!std::isfinite(item.margin) && item.margin > 0.0) item.margin = 0.0;
        item.pass = item.margin >= 0.0;
        return item;
    }
};

// Sample abscissas: a dense linear sweep through the origin plus log-spaced
// tails on both sides, so bounded rates and growth-critical rates are both
// exercised where their margins are tightest.
std::vector<double> abscissas(const ValidateOptions& opt) {
    std::vector<double> xs = linspace(-opt.x_linear_max, opt.x_linear_max, opt.x_linear_count);
    const double lo = std::max(opt.x_linear_max, 1e-3);
    if (opt.x_log_max > lo && opt.x_log_count > 0) {
        for (int i = 0; i < opt.x_log_count; ++i) {
            const double x = lo * std::pow(opt.x_log_max / lo,
                                           static_cast<double>(i) /
                                               static_cast<double>(std::max(opt.x_log_count - 1, 1)));
            xs.push_back(x);
            xs.push_back(-x);
        }
    }
    return xs;
}

} // namespace

CertificateReport validate_certificates(const ModelSpec& m, double t0, double t1,
                                        const ValidateOptions& opt) {
    if (!(t1 >= t0)) throw config_error("validation window must have t1 >= t0");
    CertificateReport report;
    const std::vector<double> ts = linspace(t0, t1, opt.t_samples);
    const std::vector<double> xs = abscissas(opt);
    const double p = m.p;

    {
        ItemBuilder bounds("coefficient_bounds");
        for (double t : linspace(t0, t1, opt.coeff_samples)) {
            const double av = m.coeff.a(t);
            const double bv = m.coeff.b(t);
            bounds.observe(av - m.coeff.a_minus, t);
            bounds.observe(m.coeff.a_zero - av, t);
            bounds.observe(bv, t);
            bounds.observe(m.coeff.b_zero - bv, t);
        }
        report.items.push_back(bounds.finish());
    }

    {
        ItemBuilder growth("Cf1");
        for (double t : ts) {
            const double c1 = m.fire.C1(t);
            for (double x : xs)
                growth.observe(c1 * (1.0 + std::pow(std::abs(x), p)) - std::abs(m.fire.f(t, x)),
                               t, x);
        }
        report.items.push_back(growth.finish());
    }

    {
        ItemBuilder diff("Cf2");
        Rng rng(opt.seed, 7);
        const double max_exp = std::log10(std::max(opt.x_log_max, 10.0));
        for (int k = 0; k < opt.pair_count; ++k) {
            const double t = rng.uniform(t0, t1);
            auto draw = [&]() {
                const double mag = std::pow(10.0, rng.uniform(-3.0, max_exp));
                return rng.uniform() < 0.5 ? -mag : mag;
            };
            const double x = draw();
            const double y = draw();
            const double bound = m.fire.C2(t) *
                                 (1.0 + std::pow(std::abs(x), p - 1.0) +
                                  std::pow(std::abs(y), p - 1.0)) *
                                 std::abs(x - y);
            diff.observe(bound - std::abs(m.fire.f(t, x) - m.fire.f(t, y)), t, x, y);
        }
        report.items.push_back(diff.finish());
    }

    if (m.fire.dfdx) {
        ItemBuilder deriv("Condf");
        for (double t : ts) {
            const double c1 = m.fire.C1(t);
            for (double x : xs)
                deriv.observe(c1 * (1.0 + std::pow(std::abs(x), p - 1.0)) -
                                  std::abs(m.fire.dfdx(t, x)),
                              t, x);
        }
        report.items.push_back(deriv.finish());
    }

    {
        ItemBuilder dissip("dissip2");
        for (double t : ts) {
            const double k2 = m.fire.k2(t);
            for (double x : xs)
                dissip.observe(k2 + m.fire.k1 * std::abs(x) - std::abs(m.fire.f(t, x)), t, x);
        }
        report.items.push_back(dissip.finish());
    }

    {
        ItemBuilder mono("monotone_majorants");
        for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
            mono.observe(m.fire.C1(ts[i + 1]) - m.fire.C1(ts[i]), ts[i + 1]);
            mono.observe(m.fire.C2(ts[i + 1]) - m.fire.C2(ts[i]), ts[i + 1]);
            mono.observe(m.fire.k2(ts[i + 1]) - m.fire.k2(ts[i]), ts[i + 1]);
        }
        if (ts.size() < 2) mono.observe(0.0, t0);
        report.items.push_back(mono.finish());
    }

    {
        ItemBuilder stim("stimulus_norm");
        const double certified = m.stim.certified_norm(m.grid, p);
        for (double t : ts)
            stim.observe(certified - m.stim.instantaneous_norm(m.grid, t, p), t);
        report.items.push_back(stim.finish());
    }

    report.all_pass = true;
    for (const auto& item : report.items)
        if (!item.pass) report.all_pass = false;
    return report;
}

} // namespace nfl
