#include "nfl/kernel.hpp"

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>

#include "nfl/csv.hpp"
#include "nfl/rng.hpp"
#include "nfl/util.hpp"

namespace nfl {

namespace {

// FFTW's planner is not thread-safe; executes on distinct buffers are.
std::mutex& fftw_mutex() {
    static std::mutex m;
    return m;
}

std::int64_t next_pow2(std::int64_t n) {
    std::int64_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

} // namespace

// Circulant embedding for (K v)_i = sum_j g(x_i - y_j) win_j: the profile
// samples g(d h) for |d| < n are wrapped into a length-2^k >= 2n ring, so a
// single complex multiply per mode realizes the full linear convolution
// (the zero padding guarantees no wrap-around contamination).
class FftConvolver {
public:
    FftConvolver(const Grid& grid, const std::function<double(double)>& g) {
        rank_ = grid.dimension();
        for (int ax = 0; ax < rank_; ++ax) {
            n_[static_cast<std::size_t>(ax)] = grid.points(ax);
            L_[static_cast<std::size_t>(ax)] = next_pow2(2 * grid.points(ax));
            h_[static_cast<std::size_t>(ax)] = grid.spacing(ax);
        }
        padded_ = L_[0] * (rank_ == 2 ? L_[1] : 1);
        const std::int64_t last = rank_ == 2 ? L_[1] : L_[0];
        freq_count_ = (padded_ / last) * (last / 2 + 1);

        std::vector<double> pad(static_cast<std::size_t>(padded_), 0.0);
        std::vector<std::complex<double>> freq(static_cast<std::size_t>(freq_count_));
        {
            std::lock_guard<std::mutex> lock(fftw_mutex());
            int dims[2] = {static_cast<int>(L_[0]), static_cast<int>(L_[1])};
            fwd_ = fftw_plan_dft_r2c(rank_, dims, pad.data(),
                                     reinterpret_cast<fftw_complex*>(freq.data()),
                                     FFTW_ESTIMATE | FFTW_UNALIGNED);
            inv_ = fftw_plan_dft_c2r(rank_, dims, reinterpret_cast<fftw_complex*>(freq.data()),
                                     pad.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
        }
        if (!fwd_ || !inv_) throw config_error("FFT plan creation failed");

        // Profile samples at signed lattice offsets, wrapped mod L.
        const std::int64_t ny = rank_ == 2 ? n_[1] : 1;
        const std::int64_t Ly = rank_ == 2 ? L_[1] : 1;
        for (std::int64_t dx = -(n_[0] - 1); dx <= n_[0] - 1; ++dx) {
            const std::int64_t px = (dx + L_[0]) % L_[0];
            for (std::int64_t dy = -(ny - 1); dy <= ny - 1; ++dy) {
                const std::int64_t py = rank_ == 2 ? (dy + Ly) % Ly : 0;
                const double r = rank_ == 2
                                     ? std::hypot(static_cast<double>(dx) * h_[0],
                                                  static_cast<double>(dy) * h_[1])
                                     : std::abs(static_cast<double>(dx)) * h_[0];
                pad[static_cast<std::size_t>(px * (rank_ == 2 ? L_[1] : 1) + py)] = g(r);
            }
        }
        fftw_execute_dft_r2c(fwd_, pad.data(), reinterpret_cast<fftw_complex*>(freq.data()));
        kernel_freq_ = std::move(freq);
    }

    ~FftConvolver() {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(inv_);
    }

    FftConvolver(const FftConvolver&) = delete;
    FftConvolver& operator=(const FftConvolver&) = delete;

    // win: node-ordered weighted input (w_j v_j). out: node-ordered result.
    void convolve(const std::vector<double>& win, std::vector<double>& out) const {
        std::vector<double> pad(static_cast<std::size_t>(padded_), 0.0);
        std::vector<std::complex<double>> freq(static_cast<std::size_t>(freq_count_));
        const std::int64_t ny = rank_ == 2 ? n_[1] : 1;
        const std::int64_t Ly = rank_ == 2 ? L_[1] : 1;
        for (std::int64_t ix = 0; ix < n_[0]; ++ix)
            for (std::int64_t iy = 0; iy < ny; ++iy)
                pad[static_cast<std::size_t>(ix * Ly + iy)] =
                    win[static_cast<std::size_t>(ix * ny + iy)];
        fftw_execute_dft_r2c(fwd_, pad.data(), reinterpret_cast<fftw_complex*>(freq.data()));
        for (std::int64_t k = 0; k < freq_count_; ++k)
            freq[static_cast<std::size_t>(k)] *= kernel_freq_[static_cast<std::size_t>(k)];
        fftw_execute_dft_c2r(inv_, reinterpret_cast<fftw_complex*>(freq.data()), pad.data());
        const double scale = 1.0 / static_cast<double>(padded_);
        out.resize(static_cast<std::size_t>(n_[0] * ny));
        for (std::int64_t ix = 0; ix < n_[0]; ++ix)
            for (std::int64_t iy = 0; iy < ny; ++iy)
                out[static_cast<std::size_t>(ix * ny + iy)] =
                    pad[static_cast<std::size_t>(ix * Ly + iy)] * scale;
    }

private:
    int rank_ = 1;
    std::array<std::int64_t, 2> n_{1, 1};
    std::array<std::int64_t, 2> L_{1, 1};
    std::array<double, 2> h_{0.0, 0.0};
    std::int64_t padded_ = 0;
    std::int64_t freq_count_ = 0;
    std::vector<std::complex<double>> kernel_freq_;
    fftw_plan fwd_ = nullptr;
    fftw_plan inv_ = nullptr;
};

namespace {

// Distance between nodes i and j, exploiting the uniform lattice.
double node_distance(const Grid& grid, std::int64_t i, std::int64_t j) {
    if (grid.dimension() == 1) {
        return std::abs(static_cast<double>(i - j)) * grid.spacing(0);
    }
    const std::int64_t ny = grid.points(1);
    const double dx = static_cast<double>(i / ny - j / ny) * grid.spacing(0);
    const double dy = static_cast<double>(i % ny - j % ny) * grid.spacing(1);
    return std::hypot(dx, dy);
}

} // namespace

Kernel Kernel::profile(GridPtr grid, std::function<double(double)> g, std::string name) {
    if (!grid) throw config_error("kernel needs a grid");
    Kernel k;
    k.grid_ = std::move(grid);
    k.name_ = std::move(name);
    k.g_ = std::move(g);
    k.convolver_ = std::make_shared<const FftConvolver>(*k.grid_, k.g_);
    return k;
}

Kernel Kernel::constant(GridPtr grid, double value) {
    return profile(std::move(grid), [value](double) { return value; }, "constant");
}

Kernel Kernel::gaussian(GridPtr grid, double sigma, double amplitude) {
    if (!(sigma > 0.0)) throw config_error("gaussian kernel needs sigma > 0");
    return profile(
        std::move(grid),
        [sigma, amplitude](double r) { return amplitude * std::exp(-r * r / (2.0 * sigma * sigma)); },
        "gaussian");
}

Kernel Kernel::mexican_hat(GridPtr grid, double sigma_e, double amp_e, double sigma_i,
                           double amp_i) {
    if (!(sigma_e > 0.0) || !(sigma_i > 0.0))
        throw config_error("mexican_hat kernel needs positive widths");
    return profile(
        std::move(grid),
        [=](double r) {
            return amp_e * std::exp(-r * r / (2.0 * sigma_e * sigma_e)) -
                   amp_i * std::exp(-r * r / (2.0 * sigma_i * sigma_i));
        },
        "mexican_hat");
}

Kernel Kernel::bump(GridPtr grid, double radius, double amplitude) {
    if (!(radius > 0.0)) throw config_error("bump kernel needs radius > 0");
    return profile(
        std::move(grid),
        [radius, amplitude](double r) {
            const double s = r / radius;
            if (s >= 1.0) return 0.0;
            return amplitude * std::exp(1.0 - 1.0 / (1.0 - s * s));
        },
        "bump");
}

Kernel Kernel::dense(GridPtr grid, std::vector<double> row_major, std::string name) {
    if (!grid) throw config_error("kernel needs a grid");
    const std::int64_t n = grid->node_count();
    if (n > dense_cutoff)
        throw config_error("dense kernel storage is limited to " +
                           std::to_string(dense_cutoff) + " nodes");
    if (static_cast<std::int64_t>(row_major.size()) != n * n)
        throw config_error("dense kernel size does not match grid");
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = i + 1; j < n; ++j) {
            const double a = row_major[static_cast<std::size_t>(i * n + j)];
            const double b = row_major[static_cast<std::size_t>(j * n + i)];
            if (std::abs(a - b) > 1e-12)
                throw config_error("dense kernel is not symmetric at (" + std::to_string(i) +
                                   "," + std::to_string(j) + ")");
            if (!std::isfinite(a) || !std::isfinite(b))
                throw config_error("dense kernel has non-finite entries");
        }
    Kernel k;
    k.grid_ = std::move(grid);
    k.name_ = std::move(name);
    k.matrix_ = std::make_shared<const std::vector<double>>(std::move(row_major));
    return k;
}

Kernel Kernel::load_csv(GridPtr grid, const std::string& path) {
    auto in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) throw config_error(path + ": empty kernel file");
    const auto header = split_csv_line(line);
    if (header.size() != 2)
        throw config_error(path + ": kernel header must be 'n_rows,n_cols'");
    const auto rows = static_cast<std::int64_t>(parse_double(header[0], path));
    const auto cols = static_cast<std::int64_t>(parse_double(header[1], path));
    const std::int64_t n = grid->node_count();
    if (rows != n || cols != n)
        throw config_error(path + ": kernel is " + std::to_string(rows) + "x" +
                           std::to_string(cols) + " but grid has " + std::to_string(n) +
                           " nodes");
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(n * n));
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        for (const auto& tok : split_csv_line(line)) values.push_back(parse_double(tok, path));
    }
    if (static_cast<std::int64_t>(values.size()) != n * n)
        throw config_error(path + ": expected " + std::to_string(n * n) + " kernel entries, found " +
                           std::to_string(values.size()));
    return dense(std::move(grid), std::move(values), "dense_csv");
}

double Kernel::entry(std::int64_t i, std::int64_t j) const {
    if (matrix_) return (*matrix_)[static_cast<std::size_t>(i * grid_->node_count() + j)];
    return g_(node_distance(*grid_, i, j));
}

Field Kernel::apply_dense(const Field& v) const {
    if (!grid_->same_layout(*v.grid())) throw config_error("kernel/field grid mismatch");
    const std::int64_t n = grid_->node_count();
    const auto& w = grid_->weights();
    const auto& x = v.values();
    std::vector<double> out(static_cast<std::size_t>(n));
    if (matrix_) {
        const auto& J = *matrix_;
        for (std::int64_t i = 0; i < n; ++i) {
            KahanSum row;
            const std::size_t base = static_cast<std::size_t>(i * n);
            for (std::int64_t j = 0; j < n; ++j)
                row.add(J[base + static_cast<std::size_t>(j)] * w[static_cast<std::size_t>(j)] *
                        x[static_cast<std::size_t>(j)]);
            out[static_cast<std::size_t>(i)] = row.value();
        }
    } else {
        for (std::int64_t i = 0; i < n; ++i) {
            KahanSum row;
            for (std::int64_t j = 0; j < n; ++j)
                row.add(g_(node_distance(*grid_, i, j)) * w[static_cast<std::size_t>(j)] *
                        x[static_cast<std::size_t>(j)]);
            out[static_cast<std::size_t>(i)] = row.value();
        }
    }
    return Field(v.grid(), std::move(out));
}

Field Kernel::apply(const Field& v) const {
    if (!convolver_) return apply_dense(v);
    if (!grid_->same_layout(*v.grid())) throw config_error("kernel/field grid mismatch");
    const std::int64_t n = grid_->node_count();
    const auto& w = grid_->weights();
    const auto& x = v.values();
    std::vector<double> win(static_cast<std::size_t>(n));
    for (std::int64_t j = 0; j < n; ++j)
        win[static_cast<std::size_t>(j)] = w[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
    std::vector<double> out;
    convolver_->convolve(win, out);
    return Field(v.grid(), std::move(out));
}

double Kernel::norm(double r) const {
    const bool is_inf = std::isinf(r) && r > 0.0;
    if (!is_inf && !(r >= 1.0))
        throw config_error("kernel norm exponent r must be >= 1 or +inf");
    const std::int64_t n = grid_->node_count();
    const auto& w = grid_->weights();
    double best = 0.0;
    if (is_inf) {
        if (matrix_) {
            for (double v : *matrix_) best = std::max(best, std::abs(v));
        } else {
            // radial profile: every |J| value occurs on row 0's offset set in
            // 1D; in 2D scan all offset pairs.
            if (grid_->dimension() == 1) {
                for (std::int64_t d = 0; d < n; ++d)
                    best = std::max(best, std::abs(g_(static_cast<double>(d) * grid_->spacing(0))));
            } else {
                for (std::int64_t dx = 0; dx < grid_->points(0); ++dx)
                    for (std::int64_t dy = 0; dy < grid_->points(1); ++dy)
                        best = std::max(best, std::abs(g_(std::hypot(
                                                  static_cast<double>(dx) * grid_->spacing(0),
                                                  static_cast<double>(dy) * grid_->spacing(1)))));
            }
        }
        return best;
    }
    for (std::int64_t i = 0; i < n; ++i) {
        KahanSum row;
        for (std::int64_t j = 0; j < n; ++j) {
            const double a = std::abs(entry(i, j));
            row.add(w[static_cast<std::size_t>(j)] * (r == 1.0 ? a : std::pow(a, r)));
        }
        const double rn = r == 1.0 ? row.value() : std::pow(row.value(), 1.0 / r);
        best = std::max(best, rn);
    }
    return best;
}

std::vector<double> Kernel::row_sums() const {
    const std::int64_t n = grid_->node_count();
    const auto& w = grid_->weights();
    std::vector<double> sums(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        KahanSum row;
        for (std::int64_t j = 0; j < n; ++j)
            row.add(entry(i, j) * w[static_cast<std::size_t>(j)]);
        sums[static_cast<std::size_t>(i)] = row.value();
    }
    return sums;
}

void Kernel::write_csv(const std::string& path) const {
    const std::int64_t n = grid_->node_count();
    if (n > dense_cutoff)
        throw config_error("kernel too large to serialize densely");
    auto out = open_output(path);
    out << n << ',' << n << '\n';
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j = 0; j < n; ++j) {
            if (j) out << ',';
            out << format_double(entry(i, j));
        }
        out << '\n';
    }
    if (!out) throw config_error("write failed: " + path);
}

KernelBoundReport verify_kernel_bounds(const Kernel& kernel, double p, int trials,
                                       std::uint64_t seed) {
    if (trials < 1) throw config_error("verify_kernel_bounds needs trials >= 1");
    const double q = conjugate_exponent(p);
    const double norm_q = kernel.norm(q);
    const double norm_1 = kernel.norm(1.0);
    const double norm_p = kernel.norm(p);
    const auto grid = kernel.grid();
    const std::int64_t n = grid->node_count();

    KernelBoundReport report;
    report.p = p;
    report.trials = trials;
    report.min_gap_sup_q = report.min_gap_l1 = report.min_gap_lp =
        std::numeric_limits<double>::infinity();

    for (int trial = 0; trial < trials; ++trial) {
        Rng rng(seed, static_cast<std::uint64_t>(trial) + 1);
        std::vector<double> values(static_cast<std::size_t>(n));
        for (auto& v : values) v = rng.uniform(-1.0, 1.0);
        const Field u(grid, std::move(values));
        const Field ku = kernel.apply_dense(u);

        double sup_ku = 0.0;
        for (std::int64_t i = 0; i < n; ++i) sup_ku = std::max(sup_ku, std::abs(ku[i]));
        const double u_p = lp_norm(u, p);
        const double u_1 = lp_norm(u, 1.0);
        const double ku_p = lp_norm(ku, p);

        const double bound_sup = norm_q * u_p;
        const double bound_l1 = norm_1 * u_p;
        const double bound_lp = norm_p * u_1;

        if (sup_ku > bound_sup || ku_p > bound_l1 || ku_p > bound_lp) ++report.violations;

        report.min_gap_sup_q = std::min(report.min_gap_sup_q, bound_sup - sup_ku);
        report.min_gap_l1 = std::min(report.min_gap_l1, bound_l1 - ku_p);
        report.min_gap_lp = std::min(report.min_gap_lp, bound_lp - ku_p);
        if (bound_sup > 0.0)
            report.max_ratio_sup_q = std::max(report.max_ratio_sup_q, sup_ku / bound_sup);
        if (bound_l1 > 0.0) report.max_ratio_l1 = std::max(report.max_ratio_l1, ku_p / bound_l1);
        if (bound_lp > 0.0) report.max_ratio_lp = std::max(report.max_ratio_lp, ku_p / bound_lp);
    }
    return report;
}

} // namespace nfl
