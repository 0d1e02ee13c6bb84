#include <algorithm>
#include <cmath>
#include <utility>

#include "nfl/csv.hpp"
#include "nfl/integrator.hpp"
#include "nfl/util.hpp"

namespace nfl {

namespace {

// 5-point Gauss-Legendre on [-1, 1].
constexpr double gl_x[5] = {0.0, -0.5384693101056831, 0.5384693101056831,
                            -0.9061798459386640, 0.9061798459386640};
constexpr double gl_w[5] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
                            0.2369268850561891, 0.2369268850561891};

constexpr double panel_target = 0.02;
constexpr double blow_up_norm = 1e12;

} // namespace

double integrate_expr(const Expr& e, double lo, double hi) {
    if (!(hi >= lo)) throw config_error("integration bounds must satisfy lo <= hi");
    if (hi == lo) return 0.0;
    const double len = hi - lo;
    const auto panels = static_cast<std::int64_t>(std::ceil(len / panel_target));
    const double h = len / static_cast<double>(panels);
    KahanSum total;
    for (std::int64_t k = 0; k < panels; ++k) {
        const double mid = lo + (static_cast<double>(k) + 0.5) * h;
        const double half = 0.5 * h;
        for (int j = 0; j < 5; ++j) total.add(gl_w[j] * half * e(mid + half * gl_x[j]));
    }
    return total.value();
}

DecayAccumulator::DecayAccumulator(Expr a) : a_(std::move(a)) {
    constant_ = a_.is_constant();
    if (constant_) constant_value_ = a_(0.0);
}

DecayAccumulator::DecayAccumulator(Expr a, double a_minus, double a_zero)
    : DecayAccumulator(std::move(a)) {
    a_minus_ = a_minus;
    a_zero_ = a_zero;
    bounded_ = true;
}

double DecayAccumulator::between(double xi1, double xi2) const {
    if (!(xi2 >= xi1)) throw config_error("decay integral needs xi1 <= xi2");
    if (xi1 == xi2) return 0.0;
    double value;
    if (constant_) {
        value = constant_value_ * (xi2 - xi1);
    } else {
        const auto key = std::make_pair(xi1, xi2);
        {
            std::lock_guard<std::mutex> lock(mutex_);
            auto it = cache_.find(key);
            if (it != cache_.end()) return it->second;
        }
        value = integrate_expr(a_, xi1, xi2);
        std::lock_guard<std::mutex> lock(mutex_);
        cache_.emplace(key, value);
    }
    if (bounded_) {
        const double len = xi2 - xi1;
        const double tol = 1e-9 * (1.0 + len);
        if (value < a_minus_ * len - tol || value > a_zero_ * len + tol)
            throw check_failure("accumulated decay over [" + format_double(xi1) + ", " +
                                format_double(xi2) + "] leaves the certified band");
    }
    return value;
}

double decay_integral(const DecayAccumulator& acc, double xi1, double xi2) {
    return acc.between(xi1, xi2);
}

Scheme scheme_from_string(const std::string& name) {
    if (name == "exponential_euler") return Scheme::exponential_euler;
    if (name == "rk4") return Scheme::rk4;
    throw config_error("unknown scheme '" + name + "' (use exponential_euler or rk4)");
}

std::string scheme_name(Scheme s) {
    return s == Scheme::exponential_euler ? "exponential_euler" : "rk4";
}

ProcessHandle make_process(ModelSpec model, Scheme scheme, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw config_error("step size dt must be positive");
    ProcessHandle h;
    h.decay = std::make_shared<DecayAccumulator>(model.coeff.a, model.coeff.a_minus,
                                                 model.coeff.a_zero);
    h.model = std::move(model);
    h.scheme = scheme;
    h.dt = dt;
    return h;
}

namespace {

Field guarded(const GridPtr& grid, std::vector<double> vals, double t_next) {
    for (double v : vals)
        if (!std::isfinite(v)) throw check_failure("blow-up at t = " + format_double(t_next));
    return Field(grid, std::move(vals));
}

} // namespace

Field step_exponential(const ProcessHandle& h, double t, const Field& u, double dt) {
    if (!(dt > 0.0)) throw config_error("step size must be positive");
    const ModelSpec& m = h.model;
    const double t_next = t + dt;
    const double decay = std::exp(-h.decay->between(t, t_next));

    // phi = integral_t^{t+dt} e^{-(A(t+dt)-A(s))} ds, one 5-point panel; the
    // integrand is smooth and the interval is one step long.
    const double mid = t + 0.5 * dt;
    const double half = 0.5 * dt;
    KahanSum phi_sum;
    for (int j = 0; j < 5; ++j) {
        const double s = mid + half * gl_x[j];
        phi_sum.add(gl_w[j] * half * std::exp(-h.decay->between(s, t_next)));
    }
    const double phi = phi_sum.value();

    const double b = m.coeff.b(t);
    const std::int64_t n = m.grid->node_count();
    std::vector<double> fired(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i)
        fired[static_cast<std::size_t>(i)] = m.fire.f(t, u[i]);
    const Field coupled = m.kernel.apply(guarded(m.grid, std::move(fired), t_next));
    const Field stim = m.stim.sample(m.grid, t);

    std::vector<double> out(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] =
            decay * u[i] + phi * (b * coupled[i] - m.h + stim[i]);
    return guarded(m.grid, std::move(out), t_next);
}

Field step_rk4(const ProcessHandle& h, double t, const Field& u, double dt) {
    if (!(dt > 0.0)) throw config_error("step size must be positive");
    const ModelSpec& m = h.model;
    const std::int64_t n = m.grid->node_count();
    const auto shifted = [&](const Field& base, const Field& slope, double scale) {
        std::vector<double> vals(static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i)
            vals[static_cast<std::size_t>(i)] = base[i] + scale * slope[i];
        return guarded(m.grid, std::move(vals), t + dt);
    };
    const Field k1 = rhs_F(m, t, u);
    const Field k2 = rhs_F(m, t + 0.5 * dt, shifted(u, k1, 0.5 * dt));
    const Field k3 = rhs_F(m, t + 0.5 * dt, shifted(u, k2, 0.5 * dt));
    const Field k4 = rhs_F(m, t + dt, shifted(u, k3, dt));
    std::vector<double> out(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] =
            u[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return guarded(m.grid, std::move(out), t + dt);
}

Field step_once(const ProcessHandle& h, double t, const Field& u, double dt) {
    return h.scheme == Scheme::exponential_euler ? step_exponential(h, t, u, dt)
                                                 : step_rk4(h, t, u, dt);
}

void evolve_observe(const ProcessHandle& h, double tau, double t, const Field& u_tau,
                    const StepObserver& observe) {
    if (!(t >= tau)) throw config_error("evolve needs t >= tau");
    if (!u_tau.grid()->same_layout(*h.model.grid))
        throw config_error("initial field grid does not match the model grid");
    const double span = t - tau;
    auto steps = static_cast<std::int64_t>(std::floor(span / h.dt + 1e-9));
    double remainder = span - static_cast<double>(steps) * h.dt;
    if (remainder <= h.dt * 1e-9) remainder = 0.0;

    std::vector<double> stamps;
    stamps.reserve(static_cast<std::size_t>(steps) + 2);
    stamps.push_back(tau);
    for (std::int64_t i = 1; i <= steps; ++i) stamps.push_back(tau + static_cast<double>(i) * h.dt);
    if (remainder > 0.0) stamps.push_back(t);
    stamps.back() = t;

    Field u = u_tau;
    double norm = lp_norm(u, h.model.p);
    if (norm > blow_up_norm) throw check_failure("blow-up at t = " + format_double(tau));
    observe(0, tau, u, norm);
    for (std::size_t i = 0; i + 1 < stamps.size(); ++i) {
        const double step = stamps[i + 1] - stamps[i];
        if (!(step > 0.0)) continue;
        u = step_once(h, stamps[i], u, step);
        norm = lp_norm(u, h.model.p);
        if (norm > blow_up_norm)
            throw check_failure("blow-up at t = " + format_double(stamps[i + 1]));
        observe(static_cast<std::int64_t>(i) + 1, stamps[i + 1], u, norm);
    }
}

Trajectory evolve(const ProcessHandle& h, double tau, double t, const Field& u_tau,
                  std::int64_t store_every) {
    if (store_every < 1) throw config_error("store_every must be >= 1");
    const double span = t - tau;
    const auto total = static_cast<std::int64_t>(std::ceil(span / h.dt - 1e-9));
    Trajectory traj;
    traj.dt = h.dt;
    traj.scheme = scheme_name(h.scheme);
    traj.p = h.model.p;
    evolve_observe(h, tau, t, u_tau,
                   [&](std::int64_t step, double time, const Field& u, double norm) {
                       if (step % store_every != 0 && step != total) return;
                       traj.times.push_back(time);
                       traj.fields.push_back(u);
                       traj.norms.push_back(norm);
                   });
    return traj;
}

Field evolve_final(const ProcessHandle& h, double tau, double t, const Field& u_tau) {
    Field out = u_tau;
    evolve_observe(h, tau, t, u_tau,
                   [&](std::int64_t, double, const Field& u, double) { out = u; });
    return out;
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
    auto out = open_output(path);
    out << "t,node_index,value\n";
    for (std::size_t s = 0; s < traj.times.size(); ++s) {
        const Field& u = traj.fields[s];
        for (std::int64_t i = 0; i < u.size(); ++i)
            out << format_double(traj.times[s]) << ',' << i << ',' << format_double(u[i])
                << '\n';
    }
}

void write_trajectory_norms_csv(const Trajectory& traj, const std::string& path) {
    auto out = open_output(path);
    out << "t,l1,l2,lp,sup\n";
    for (std::size_t s = 0; s < traj.times.size(); ++s) {
        const Field& u = traj.fields[s];
        double sup = 0.0;
        for (std::int64_t i = 0; i < u.size(); ++i) sup = std::max(sup, std::abs(u[i]));
        out << format_double(traj.times[s]) << ',' << format_double(lp_norm(u, 1.0)) << ','
            << format_double(lp_norm(u, 2.0)) << ',' << format_double(lp_norm(u, traj.p))
            << ',' << format_double(sup) << '\n';
    }
}

} // namespace nfl
