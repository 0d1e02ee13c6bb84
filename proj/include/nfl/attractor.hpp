#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nfl/dynamics.hpp"
#include "nfl/integrator.hpp"

namespace nfl {

// The constants the absorbing estimate consumes, detached from the model so
// the radius and envelope formulas can be probed directly. epsilon() must be
// positive for every operation in this header.
struct DissipationBudget {
    double a_minus = 0.0;
    double a_zero = 0.0;
    double b_zero = 0.0;
    double k1 = 0.0;
    Expr k2 = Expr::constant(0.0);
    double p = 2.0;
    double volume = 0.0;
    std::function<double(double)> stim_norm; // t -> ||S(t, .)||_p by quadrature
    double stim_norm_sup = 0.0;              // certified sup over t
    double delta = 1.0;
    // k2 and the stimulus norm both time-independent: radii are one number
    // and re-exit from the absorbing ball is forbidden.
    bool time_constant = false;

    double epsilon() const { return a_minus - k1 * b_zero; }
};

DissipationBudget make_budget(const ModelSpec& m, double delta);

// R_delta(t) = (1+delta)/epsilon [b0 k2(t) |Omega|^{1/p} + ||S(t, .)||_p],
// with the instantaneous stimulus norm.
double absorbing_radius(const DissipationBudget& budget, double t);

struct EnvelopeReport {
    struct Row {
        double t = 0.0;
        double norm = 0.0;     // ||u(t)||_p
        double envelope = 0.0; // decay envelope in norm units
        double radius = 0.0;   // R_delta(t)
        bool outside = false;  // norm >= radius at this stamp
    };
    std::vector<Row> rows;
    bool pass = true;
    // min over asserted stamps of (1.01 E - N) / E computed in ||.||^p units
    double min_margin = 0.0;
    double witness_time = 0.0;
    bool entered = false;
    double entry_time = 0.0;
    bool re_exited = false;
    double re_exit_time = 0.0;
};

// Evolves from u_tau and asserts, at every stamp before first entry into
// the ball of radius R_delta(t), the decay envelope
//   ||u(t)||^p <= e^{-delta p/(1+delta) epsilon (t-tau)} ||u_tau||^p
// with 1% multiplicative slack. Records entry time; for time-constant
// budgets a later stamp with norm >= R_delta (1+1e-6) fails the report.
EnvelopeReport decay_envelope_check(const ProcessHandle& h, const DissipationBudget& budget,
                                    double tau, double t_end, const Field& u_tau);

// max over a in A of min over b in B of lp_distance(a, b).
double hausdorff_semidist(const std::vector<Field>& a, const std::vector<Field>& b, double p);

struct AttractorSection {
    double t = 0.0;
    double horizon = 0.0; // largest horizon, the one members come from
    std::vector<Field> members;
    std::vector<double> horizons;
    std::vector<double> gaps; // semidistance between consecutive-horizon sections
    bool gaps_nonincreasing = true;
    double last_gap = 0.0;
    bool converged = true; // last gap <= 1e-3 (diagnostic, not an error)
    double max_member_norm = 0.0;
    double radius_at_t = 0.0; // R_delta(t)
    bool contained = true;    // max norm <= R_delta(t) (1 + 1e-6)
    std::uint64_t seed = 0;
    int ensemble_size = 0;
    double draw_radius = 0.0; // 2 R_delta(t - max horizon)
};

// Pullback section surrogate: a fixed seeded ensemble drawn in the ball of
// radius 2 R_delta(t - H_max) is evolved from t - H to t for each horizon H;
// members closer than 1e-8 in L^p merge. The returned set is the largest
// horizon's; consecutive-horizon semidistances diagnose convergence.
AttractorSection sample_attractor_section(const ProcessHandle& h,
                                          const DissipationBudget& budget, double t,
                                          const std::vector<double>& horizons,
                                          int ensemble_size, std::uint64_t seed);

struct ContinuityReport {
    struct Row {
        double t = 0.0;
        double gap = 0.0;      // ||u_S(t) - u_S0(t)||_p
        double majorant = 0.0; // Gronwall bound M(t)
        double ratio = 0.0;    // gap / ||S - S0||_p
    };
    std::vector<Row> rows;
    bool pass = true;
    double min_margin = 0.0; // min over stamps of (majorant - gap) / majorant
    double witness_time = 0.0;
    double rho = 0.0;          // measured trajectory bound, inflated 10%
    double stimulus_gap = 0.0; // sup over stamps of ||S(t,.) - S0(t,.)||_p
    double final_ratio = 0.0;  // rows.back().ratio
};

// Evolves the same initial state under stimuli S and S0 and asserts, at
// every stamp, the Gronwall majorant
//   g(t) <= e^{(a0-a_-) t} / a0
//           exp(integral_tau^t b0 ||J||_p C2(s) [|Omega|^{1/q} + 2 rho^{p/q}] ds)
//           ||S - S0||_p,
// where rho bounds both trajectories' norms on [tau, L] (measured, then
// inflated 10%) and ||S - S0||_p is the sup over stamps of the instantaneous
// difference norm.
ContinuityReport continuity_gap(const ProcessHandle& h, const Stimulus& S, const Stimulus& S0,
                                double tau, double L, const Field& u_tau);

struct SemicontinuityReport {
    struct Row {
        double level = 0.0;
        double distance = 0.0; // dist(section at S0 + level P -> section at S0)
    };
    std::vector<Row> rows;
    bool monotone = true;   // nonincreasing within 10% slack
    bool contracted = true; // last distance <= first / 4
    bool pass = true;
    double witness_level = 0.0;
};

// Samples the baseline section (the handle's stimulus) and one section per
// perturbation level c (stimulus S0 + c P) at a shared horizon and seed,
// then checks that the semidistances into the baseline section shrink.
SemicontinuityReport upper_semicontinuity_curve(const ProcessHandle& h,
                                                const Stimulus& perturbation, double t,
                                                const std::vector<double>& levels, double delta,
                                                double horizon, int ensemble_size,
                                                std::uint64_t seed);

} // namespace nfl
