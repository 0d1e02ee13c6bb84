#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "nfl/field.hpp"
#include "nfl/grid.hpp"

namespace nfl {

// Symmetric connectivity kernel J on Omega x Omega and the operator
//   (K v)(x) = integral_Omega J(x, y) v(y) dy,
// discretized with the grid's trapezoid weights. Two evaluation routes:
//   - dense quadrature (the reference: a straight weighted double loop),
//   - a zero-padded circulant FFT path for translation-invariant profiles,
//     exact up to roundoff because fields vanish outside Omega.
// apply() takes the FFT route for profile kernels and the dense route
// otherwise; apply_dense() always takes the reference route.
class Kernel {
public:
    // J(x,y) = value.
    // Empty until assigned from a factory; make_model rejects the empty state.
    Kernel() = default;

    static Kernel constant(GridPtr grid, double value);
    // J(x,y) = amplitude * exp(-|x-y|^2 / (2 sigma^2)).
    static Kernel gaussian(GridPtr grid, double sigma, double amplitude);
    // Difference of Gaussians (lateral inhibition shape).
    static Kernel mexican_hat(GridPtr grid, double sigma_e, double amp_e, double sigma_i,
                              double amp_i);
    // Compactly supported bump: amplitude * exp(1 - 1/(1 - (r/radius)^2)) for
    // r < radius, zero outside.
    static Kernel bump(GridPtr grid, double radius, double amplitude);
    // Any radial profile g(|x-y|).
    static Kernel profile(GridPtr grid, std::function<double(double)> g, std::string name);
    // Explicit dense matrix, row-major, must be symmetric within 1e-12.
    static Kernel dense(GridPtr grid, std::vector<double> row_major, std::string name = "dense");
    // Dense CSV: header "n_rows,n_cols", then one row per line.
    static Kernel load_csv(GridPtr grid, const std::string& path);

    const std::string& name() const { return name_; }
    const GridPtr& grid() const { return grid_; }
    bool translation_invariant() const { return static_cast<bool>(g_); }

    Field apply(const Field& v) const;
    Field apply_dense(const Field& v) const;

    double entry(std::int64_t i, std::int64_t j) const;

    // ||J||_r = sup_x ||J(x, .)||_{L^r(Omega)}; r may be +inf (sup of |J|).
    double norm(double r) const;

    // Row quadrature sums integral_Omega J(x_i, y) dy; the deviation from 1
    // is the mass deficit reported by the CLI (never silently repaired).
    std::vector<double> row_sums() const;

    void write_csv(const std::string& path) const;

    // Largest node count for which dense matrices may be materialized.
    static constexpr std::int64_t dense_cutoff = 8192;

private:
    GridPtr grid_;
    std::string name_;
    std::function<double(double)> g_;         // radial profile, empty for dense kernels
    std::shared_ptr<const std::vector<double>> matrix_; // dense storage, empty for profiles
    std::shared_ptr<const class FftConvolver> convolver_;
};

// One Monte Carlo sweep of the three operator inequalities
//   (i)  sup_x |K v(x)|   <= ||J||_q ||v||_p   (q conjugate to p)
//   (ii) ||K v||_p        <= ||J||_1 ||v||_p
//   (iii)||K v||_p        <= ||J||_p ||v||_1
// checked with zero tolerance against dense evaluation.
struct KernelBoundReport {
    double p = 0.0;
    int trials = 0;
    int violations = 0;
    // bound - actual, minimized over trials, per inequality
    double min_gap_sup_q = 0.0;
    double min_gap_l1 = 0.0;
    double min_gap_lp = 0.0;
    // actual / bound, maximized over trials, per inequality
    double max_ratio_sup_q = 0.0;
    double max_ratio_l1 = 0.0;
    double max_ratio_lp = 0.0;
};

KernelBoundReport verify_kernel_bounds(const Kernel& kernel, double p, int trials,
                                       std::uint64_t seed);

} // namespace nfl
