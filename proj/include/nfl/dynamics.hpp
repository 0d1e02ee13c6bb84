#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nfl/expr.hpp"
#include "nfl/field.hpp"
#include "nfl/kernel.hpp"

namespace nfl {

// Time-dependent decay and coupling coefficients with certified bounds
//   0 < a_minus <= a(t) <= a_zero,   0 < b(t) <= b_zero.
struct CoefficientPair {
    Expr a = Expr::constant(0.0);
    Expr b = Expr::constant(0.0);
    double a_minus = 0.0;
    double a_zero = 0.0;
    double b_zero = 0.0;

    // Samples both coefficients on [t0, t1] and throws check_failure naming
    // the violated bound and a witness time.
    void validate(double t0, double t1, int samples = 10000) const;
};

// Firing rate f(t, x) plus the certificates the estimates consume:
//   |f(t,x)|        <= C1(t) (1 + |x|^p)
//   |f(t,x)-f(t,y)| <= C2(t) (1 + |x|^{p-1} + |y|^{p-1}) |x - y|
//   |d_x f(t,x)|    <= C1(t) (1 + |x|^{p-1})
//   |f(t,x)|        <= k2(t) + k1 |x|
// C1, C2, k2 must be non-decreasing in t. Certificates are data: they are
// sampled by validate_certificates, never assumed.
struct FiringRate {
    std::string name;
    double p = 2.0;
    std::function<double(double, double)> f;
    std::function<double(double, double)> dfdx; // empty when unavailable
    // Certificates are expressions of t so downstream estimates can
    // integrate them exactly and detect time-constant budgets.
    Expr C1 = Expr::constant(0.0);
    Expr C2 = Expr::constant(0.0);
    Expr k2 = Expr::constant(0.0);
    double k1 = 0.0;
};

FiringRate firing_zero(double p);
FiringRate firing_linear(double p, double slope, double k2_value);
FiringRate firing_tanh(double p, double gain, double amplitude, double k1);
FiringRate firing_logistic(double p, double beta, double amplitude, double k1);
FiringRate firing_ramp(double p, double slope, double saturation, double k1);
// x |x|^{p-2} sigma(x) growth stress profile; requires p >= 2. Its dissip2
// certificate is honest only at p = 2 (growth is genuinely superlinear
// beyond that, which is the point of the stress profile).
FiringRate firing_power_sigmoid(double p);
// x^3 with certificates valid for p >= 3; used at lower p it is the
// canonical broken-certificate specimen.
FiringRate firing_cubic(double p);

// External input S(t, x). Builtins carry a pointwise bound sup |S|, so
// |A| |Omega|^{1/p} certifies the sup-in-time L^p norm; scenarios may
// override with a tighter certified value (checked by the validator).
struct Stimulus {
    std::string name;
    std::function<double(double, double, double)> S; // (t, x, y)
    double sup_abs = 0.0;
    bool norm_time_constant = false;
    std::optional<double> certified_norm_override;

    Field sample(const GridPtr& grid, double t) const;
    double instantaneous_norm(const GridPtr& grid, double t, double p) const;
    double certified_norm(const GridPtr& grid, double p) const;
};

Stimulus stimulus_zero();
Stimulus stimulus_constant(double value);
Stimulus stimulus_gaussian_bump(double amplitude, double cx, double cy, double width);
Stimulus stimulus_moving_bump(double amplitude, double cx, double cy, double width, double vx,
                              double vy);
// Spatially uniform amplitude * sin(omega t + phase).
Stimulus stimulus_sinusoid(double amplitude, double omega, double phase);
// S0 + c * P, with the pointwise bound combined conservatively.
Stimulus stimulus_sum(const Stimulus& s0, const Stimulus& p, double c);

// The assembled right-hand side
//   F(t, u) = -a(t) u + b(t) K f(t, u(.)) - h + S(t, .).
struct ModelSpec {
    GridPtr grid;
    Kernel kernel;
    CoefficientPair coeff;
    FiringRate fire;
    Stimulus stim;
    double h = 0.0;
    double p = 2.0;

    double volume() const { return grid->volume(); }
    // Dissipativity gate k1 b0 < a_minus; attractor experiments require it.
    bool dissipativity_gate() const { return fire.k1 * coeff.b_zero < coeff.a_minus; }
    double epsilon() const { return coeff.a_minus - fire.k1 * coeff.b_zero; }
};

ModelSpec make_model(GridPtr grid, Kernel kernel, CoefficientPair coeff, FiringRate fire,
                     Stimulus stim, double h, double p);

Field rhs_F(const ModelSpec& m, double t, const Field& u);

// a0 + b0 C2(t) ||J||_p (|Omega|^{1/q} + rho_u^{p/q} + rho_v^{p/q}), the
// certified Lipschitz constant of F(t, .) on balls of radius rho_u, rho_v.
double lipschitz_majorant(const ModelSpec& m, double t, double rho_u, double rho_v);

// DF(t,u) v = -a(t) v + b(t) K (d_x f(t, u(.)) v(.)).
Field frechet_derivative(const ModelSpec& m, double t, const Field& u, const Field& v);

// max over log-spaced |x| in [x_lo, x_hi] (both signs) of |f(t, x)| / |x|.
double estimate_k1(const FiringRate& fire, double t, double x_lo, double x_hi, int samples);

struct CertificateReport {
    struct Item {
        std::string condition;
        bool pass = true;
        double margin = 0.0; // min over samples of (bound - value)
        double witness_t = 0.0;
        double witness_x = 0.0;
        double witness_y = 0.0;
    };
    std::vector<Item> items;
    bool all_pass = true;

    const Item* first_failure() const;
};

struct ValidateOptions {
    int coeff_samples = 10000;
    int t_samples = 65;
    double x_linear_max = 4.0;
    int x_linear_count = 161;
    double x_log_max = 1e3;
    int x_log_count = 81;
    int pair_count = 2000;
    std::uint64_t seed = 2026;
};

// Samples every certificate over [t0, t1] x {x grid}; reports one item per
// condition with the worst margin and its witness.
CertificateReport validate_certificates(const ModelSpec& m, double t0, double t1,
                                        const ValidateOptions& opt = {});

} // namespace nfl
