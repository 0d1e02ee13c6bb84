#include <cmath>
#include <utility>

#include "nfl/dynamics.hpp"
#include "nfl/util.hpp"

namespace nfl {

Field Stimulus::sample(const GridPtr& grid, double t) const {
    const std::int64_t n = grid->node_count();
    std::vector<double> vals(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        const auto xy = grid->coordinate(i);
        vals[static_cast<std::size_t>(i)] = S(t, xy[0], xy[1]);
    }
    return Field(grid, std::move(vals));
}

double Stimulus::instantaneous_norm(const GridPtr& grid, double t, double p) const {
    return lp_norm(sample(grid, t), p);
}

double Stimulus::certified_norm(const GridPtr& grid, double p) const {
    if (certified_norm_override) return *certified_norm_override;
    return sup_abs * std::pow(grid->volume(), 1.0 / p);
}

Stimulus stimulus_zero() {
    Stimulus s;
    s.name = "zero";
    s.S = [](double, double, double) { return 0.0; };
    s.sup_abs = 0.0;
    s.norm_time_constant = true;
    return s;
}

Stimulus stimulus_constant(double value) {
    Stimulus s;
    s.name = "constant";
    s.S = [value](double, double, double) { return value; };
    s.sup_abs = std::abs(value);
    s.norm_time_constant = true;
    return s;
}

Stimulus stimulus_gaussian_bump(double amplitude, double cx, double cy, double width) {
    if (!(width > 0.0)) throw config_error("stimulus bump width must be positive");
    Stimulus s;
    s.name = "gaussian_bump";
    s.S = [amplitude, cx, cy, width](double, double x, double y) {
        const double dx = x - cx;
        const double dy = y - cy;
        return amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * width * width));
    };
    s.sup_abs = std::abs(amplitude);
    s.norm_time_constant = true;
    return s;
}

Stimulus stimulus_moving_bump(double amplitude, double cx, double cy, double width, double vx,
                              double vy) {
    if (!(width > 0.0)) throw config_error("stimulus bump width must be positive");
    Stimulus s;
    s.name = "moving_bump";
    s.S = [amplitude, cx, cy, width, vx, vy](double t, double x, double y) {
        const double dx = x - cx - vx * t;
        const double dy = y - cy - vy * t;
        return amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * width * width));
    };
    s.sup_abs = std::abs(amplitude);
    s.norm_time_constant = false;
    return s;
}

Stimulus stimulus_sinusoid(double amplitude, double omega, double phase) {
    Stimulus s;
    s.name = "sinusoid";
    s.S = [amplitude, omega, phase](double t, double, double) {
        return amplitude * std::sin(omega * t + phase);
    };
    s.sup_abs = std::abs(amplitude);
    s.norm_time_constant = false;
    return s;
}

Stimulus stimulus_sum(const Stimulus& s0, const Stimulus& p, double c) {
    Stimulus s;
    s.name = s0.name + "+" + p.name;
    auto base = s0.S;
    auto pert = p.S;
    s.S = [base, pert, c](double t, double x, double y) {
        return base(t, x, y) + c * pert(t, x, y);
    };
    // Triangle inequality; tight certificates are the scenario's business.
    s.sup_abs = s0.sup_abs + std::abs(c) * p.sup_abs;
    s.norm_time_constant = s0.norm_time_constant && p.norm_time_constant;
    return s;
}

} // namespace nfl
