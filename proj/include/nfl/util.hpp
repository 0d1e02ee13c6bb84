#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace nfl {

// Thrown for malformed input: bad files, bad parameters, violated type
// preconditions. The CLI maps this to exit code 2.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when an executed experiment's assertion fails (certificate
// violation, blow-up, envelope breach). The CLI maps this to exit code 1.
struct check_failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Compensated (Kahan) accumulator. Quadrature sums, norms and row sums all
// go through this so reductions are deterministic and the 1e-12 weight-sum
// invariant survives grids of ~10^6 nodes.
class KahanSum {
public:
    void add(double x) {
        const double y = x - c_;
        const double t = s_ + y;
        c_ = (t - s_) - y;
        s_ = t;
    }
    double value() const { return s_; }

private:
    double s_ = 0.0;
    double c_ = 0.0;
};

// Conjugate exponent: q = p/(p-1), with q = +inf for p = 1.
inline double conjugate_exponent(double p) {
    if (!(p >= 1.0)) throw config_error("exponent p must satisfy p >= 1");
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    return p / (p - 1.0);
}

// |Omega|^(1/q) and rho^(p/q) conventions: 1/inf = 0 and x^0 = 1, which is
// exactly what the p = 1 (q = inf) Hoelder pairing needs.
inline double pow_or_one(double base, double exponent) {
    if (exponent == 0.0) return 1.0;
    return std::pow(base, exponent);
}

// Worker cap for ensemble runs: NFL_THREADS if set, else hardware count,
// clamped to [1, 64]. Parallelism is only ever across independent ensemble
// members, so results do not depend on the schedule.
unsigned worker_count();

// Runs fn(i) for i in [0, n) on up to worker_count() threads.
void parallel_for_index(std::int64_t n, const std::function<void(std::int64_t)>& fn);

} // namespace nfl
