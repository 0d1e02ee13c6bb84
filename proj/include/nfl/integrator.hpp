#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "nfl/dynamics.hpp"
#include "nfl/expr.hpp"
#include "nfl/field.hpp"

namespace nfl {

// Integral of a grammar expression over [lo, hi] by composite 5-point
// Gauss-Legendre panels (panel length <= 0.02). The grammar only yields
// smooth integrands, so the error is far below 1e-10 per unit length for
// the oscillation frequencies scenarios actually use.
double integrate_expr(const Expr& e, double lo, double hi);

// Accumulated decay A(xi2) - A(xi1) = integral of a over [xi1, xi2].
// Segment integrals are memoized under a mutex: a fixed-step ensemble run
// asks for the same lattice-aligned segments in every member, so each is
// quadratured exactly once. When certified bounds are attached, every
// evaluated segment is checked against a_minus (len) <= dA <= a_zero (len).
class DecayAccumulator {
public:
    explicit DecayAccumulator(Expr a);
    DecayAccumulator(Expr a, double a_minus, double a_zero);

    // A(xi2) - A(xi1); requires xi1 <= xi2.
    double between(double xi1, double xi2) const;

private:
    Expr a_;
    double a_minus_ = 0.0;
    double a_zero_ = 0.0;
    bool bounded_ = false;
    bool constant_ = false;
    double constant_value_ = 0.0;
    mutable std::mutex mutex_;
    mutable std::map<std::pair<double, double>, double> cache_;
};

double decay_integral(const DecayAccumulator& acc, double xi1, double xi2);

enum class Scheme { exponential_euler, rk4 };

Scheme scheme_from_string(const std::string& name);
std::string scheme_name(Scheme s);

// The two-parameter solution operator T(t, tau) in executable form: a model
// plus a stepper configuration. Copyable; the decay cache is shared.
struct ProcessHandle {
    ModelSpec model;
    Scheme scheme = Scheme::exponential_euler;
    double dt = 0.01;
    std::shared_ptr<DecayAccumulator> decay;
};

ProcessHandle make_process(ModelSpec model, Scheme scheme, double dt);

// One step of the variation-of-constants scheme,
//   u+ = e^{-(A(t+dt)-A(t))} u + phi [b(t) K f(t,u) - h + S(t, .)],
//   phi = integral_t^{t+dt} e^{-(A(t+dt)-A(s))} ds (5-point Gauss-Legendre),
// with the nonlinear and forcing terms frozen at the left endpoint. Exact
// for f = 0 with anything grammar-expressible for a, and for constant
// coefficients exact on constant forcing.
Field step_exponential(const ProcessHandle& h, double t, const Field& u, double dt);

// Classical fourth-order step on u' = F(t, u); the cross-validation scheme.
Field step_rk4(const ProcessHandle& h, double t, const Field& u, double dt);

Field step_once(const ProcessHandle& h, double t, const Field& u, double dt);

struct Trajectory {
    std::vector<double> times;  // strictly increasing, first = tau
    std::vector<Field> fields;  // one per stamp
    std::vector<double> norms;  // L^p norm per stamp
    double dt = 0.0;
    std::string scheme;
    double p = 2.0;
};

// Called after every step (and once for the initial state) with the step
// index, the time, the state, and its L^p norm.
using StepObserver = std::function<void(std::int64_t, double, const Field&, double)>;

// Core loop: fixed steps of h.dt from tau to t (final step shortened to
// land on t exactly). Aborts with check_failure("blow-up at t = ...") when
// the norm leaves [0, 1e12] or turns non-finite.
void evolve_observe(const ProcessHandle& h, double tau, double t, const Field& u_tau,
                    const StepObserver& observe);

// Stores every store_every-th stamp plus the first and last.
Trajectory evolve(const ProcessHandle& h, double tau, double t, const Field& u_tau,
                  std::int64_t store_every = 1);

// Terminal state only; the memory-lean path for ensembles.
Field evolve_final(const ProcessHandle& h, double tau, double t, const Field& u_tau);

// Long form: header t,node_index,value; one row per stamp and node.
void write_trajectory_csv(const Trajectory& traj, const std::string& path);

// Compact form: header t,l1,l2,lp,sup; one row per stamp.
void write_trajectory_norms_csv(const Trajectory& traj, const std::string& path);

} // namespace nfl
