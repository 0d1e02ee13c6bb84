#include <algorithm>
#include <cmath>

#include "nfl/dynamics.hpp"
#include "nfl/util.hpp"

namespace nfl {

namespace {

Expr const_fn(double v) { return Expr::constant(v); }

void require_p(double p) {
    if (!std::isfinite(p) || p < 1.0)
        throw config_error("firing rate exponent p must be finite and >= 1");
}

double logistic_sigma(double x) { return 1.0 / (1.0 + std::exp(-x)); }

} // namespace

FiringRate firing_zero(double p) {
    require_p(p);
    FiringRate fr;
    fr.name = "zero";
    fr.p = p;
    fr.f = [](double, double) { return 0.0; };
    fr.dfdx = [](double, double) { return 0.0; };
    fr.C1 = const_fn(0.0);
    fr.C2 = const_fn(0.0);
    fr.k2 = const_fn(0.0);
    fr.k1 = 0.0;
    return fr;
}

FiringRate firing_linear(double p, double slope, double k2_value) {
    require_p(p);
    const double s = std::abs(slope);
    FiringRate fr;
    fr.name = "linear";
    fr.p = p;
    fr.f = [slope](double, double x) { return slope * x; };
    fr.dfdx = [slope](double, double) { return slope; };
    // |x| <= 1 + |x|^p for every p >= 1, so C1 = |slope| covers both the
    // growth bound and the derivative bound.
    fr.C1 = const_fn(s);
    fr.C2 = const_fn(s);
    fr.k1 = s;
    fr.k2 = const_fn(k2_value);
    return fr;
}

FiringRate firing_tanh(double p, double gain, double amplitude, double k1) {
    require_p(p);
    if (!(gain > 0.0) || !(amplitude > 0.0))
        throw config_error("tanh firing rate needs positive gain and amplitude");
    if (!(k1 >= 0.0)) throw config_error("k1 must be >= 0");
    FiringRate fr;
    fr.name = "tanh";
    fr.p = p;
    fr.f = [gain, amplitude](double, double x) { return amplitude * std::tanh(gain * x); };
    fr.dfdx = [gain, amplitude](double, double x) {
        const double c = std::cosh(gain * x);
        return amplitude * gain / (c * c);
    };
    fr.C1 = const_fn(std::max(amplitude, amplitude * gain));
    fr.C2 = const_fn(amplitude * gain);
    fr.k1 = k1;
    // Smallest constant with A tanh(g x) <= k2 + k1 x on x >= 0: the gap is
    // maximal where the slopes match, A g sech^2(g x*) = k1.
    double k2;
    if (k1 >= amplitude * gain) {
        k2 = 1e-9;
    } else if (k1 == 0.0) {
        k2 = amplitude;
    } else {
        const double tstar = std::sqrt(1.0 - k1 / (amplitude * gain));
        const double xstar = std::atanh(tstar) / gain;
        k2 = amplitude * tstar - k1 * xstar + 1e-9;
    }
    fr.k2 = const_fn(k2);
    return fr;
}

FiringRate firing_logistic(double p, double beta, double amplitude, double k1) {
    require_p(p);
    if (!(beta > 0.0) || !(amplitude > 0.0))
        throw config_error("logistic firing rate needs positive beta and amplitude");
    FiringRate fr;
    fr.name = "logistic";
    fr.p = p;
    fr.f = [beta, amplitude](double, double x) { return amplitude * logistic_sigma(beta * x); };
    fr.dfdx = [beta, amplitude](double, double x) {
        const double s = logistic_sigma(beta * x);
        return amplitude * beta * s * (1.0 - s);
    };
    fr.C1 = const_fn(std::max(amplitude, amplitude * beta / 4.0));
    fr.C2 = const_fn(amplitude * beta / 4.0);
    fr.k1 = k1;
    fr.k2 = const_fn(amplitude);
    return fr;
}

FiringRate firing_ramp(double p, double slope, double saturation, double k1) {
    require_p(p);
    if (!(slope > 0.0) || !(saturation > 0.0))
        throw config_error("ramp firing rate needs positive slope and saturation");
    FiringRate fr;
    fr.name = "ramp";
    fr.p = p;
    fr.f = [slope, saturation](double, double x) {
        return std::clamp(slope * x, -saturation, saturation);
    };
    // Derivative away from the two kink points; adequate for sampling checks,
    // and honest about the kink is the caller's business (Frechet tests use
    // smooth rates).
    fr.dfdx = [slope, saturation](double, double x) {
        return std::abs(slope * x) < saturation ? slope : 0.0;
    };
    fr.C1 = const_fn(std::max(slope, saturation));
    fr.C2 = const_fn(slope);
    fr.k1 = k1;
    fr.k2 = const_fn(saturation);
    return fr;
}

FiringRate firing_power_sigmoid(double p) {
    require_p(p);
    if (p < 2.0) throw config_error("power_sigmoid requires p >= 2");
    FiringRate fr;
    fr.name = "power_sigmoid";
    fr.p = p;
    fr.f = [p](double, double x) {
        return x * std::pow(std::abs(x), p - 2.0) * logistic_sigma(x);
    };
    fr.dfdx = [p](double, double x) {
        const double s = logistic_sigma(x);
        const double a = std::abs(x);
        return (p - 1.0) * std::pow(a, p - 2.0) * s +
               x * std::pow(a, p - 2.0) * s * (1.0 - s);
    };
    fr.C1 = const_fn(p);
    fr.C2 = const_fn(p);
    // |x sigma(x)| <= |x|, so the linear-growth certificate is honest at
    // p = 2 and only there.
    fr.k1 = 1.0;
    fr.k2 = const_fn(0.01);
    return fr;
}

FiringRate firing_cubic(double p) {
    require_p(p);
    FiringRate fr;
    fr.name = "cubic";
    fr.p = p;
    fr.f = [](double, double x) { return x * x * x; };
    fr.dfdx = [](double, double x) { return 3.0 * x * x; };
    fr.C1 = const_fn(3.0);
    fr.C2 = const_fn(3.0);
    fr.k1 = 1.0;
    fr.k2 = const_fn(0.01);
    return fr;
}

} // namespace nfl
