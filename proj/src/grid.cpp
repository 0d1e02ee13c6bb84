#include "nfl/grid.hpp"

#include <cmath>

#include "nfl/util.hpp"

namespace nfl {

namespace {

// Per-axis trapezoid weights: h/2 at the two endpoints, h inside.
std::vector<double> axis_weights(double extent, std::int64_t n) {
    const double h = extent / static_cast<double>(n - 1);
    std::vector<double> w(static_cast<std::size_t>(n), h);
    w.front() = 0.5 * h;
    w.back() = 0.5 * h;
    return w;
}

} // namespace

std::shared_ptr<const Grid> Grid::make(int dimension,
                                       std::vector<double> extents,
                                       std::vector<std::int64_t> points) {
    if (dimension != 1 && dimension != 2)
        throw config_error("grid dimension must be 1 or 2");
    if (extents.size() != static_cast<std::size_t>(dimension) ||
        points.size() != static_cast<std::size_t>(dimension))
        throw config_error("grid extents/points must have one entry per axis");
    for (double L : extents)
        if (!(L > 0.0) || !std::isfinite(L))
            throw config_error("grid extent must be finite and positive");
    for (std::int64_t n : points)
        if (n < 2) throw config_error("grid needs at least 2 points per axis");

    auto grid = std::shared_ptr<Grid>(new Grid());
    grid->dimension_ = dimension;
    grid->extents_ = std::move(extents);
    grid->points_ = std::move(points);

    std::int64_t count = 1;
    double volume = 1.0;
    for (int ax = 0; ax < dimension; ++ax) {
        count *= grid->points_[static_cast<std::size_t>(ax)];
        volume *= grid->extents_[static_cast<std::size_t>(ax)];
        grid->spacing_.push_back(grid->extents_[static_cast<std::size_t>(ax)] /
                                 static_cast<double>(grid->points_[static_cast<std::size_t>(ax)] - 1));
    }
    grid->node_count_ = count;
    grid->volume_ = volume;

    grid->weights_.resize(static_cast<std::size_t>(count));
    const auto wx = axis_weights(grid->extents_[0], grid->points_[0]);
    if (dimension == 1) {
        grid->weights_ = wx;
    } else {
        const auto wy = axis_weights(grid->extents_[1], grid->points_[1]);
        std::size_t idx = 0;
        for (double wxi : wx)
            for (double wyj : wy) grid->weights_[idx++] = wxi * wyj;
    }

    // Weight sum must reproduce |Omega| to 1e-12 relative.
    KahanSum total;
    for (double w : grid->weights_) total.add(w);
    if (std::abs(total.value() - volume) > 1e-12 * volume)
        throw config_error("grid weights do not sum to the domain volume");

    return grid;
}

std::array<double, 2> Grid::coordinate(std::int64_t i) const {
    if (dimension_ == 1) return {static_cast<double>(i) * spacing_[0], 0.0};
    const std::int64_t ny = points_[1];
    const std::int64_t ix = i / ny;
    const std::int64_t iy = i % ny;
    return {static_cast<double>(ix) * spacing_[0], static_cast<double>(iy) * spacing_[1]};
}

bool Grid::same_layout(const Grid& other) const {
    return dimension_ == other.dimension_ && extents_ == other.extents_ &&
           points_ == other.points_;
}

} // namespace nfl
