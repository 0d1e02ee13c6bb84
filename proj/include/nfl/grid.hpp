#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

namespace nfl {

// Uniform tensor grid over Omega = [0, L1] (x [0, L2] in 2D) with trapezoid
// quadrature weights: h per interior node, h/2 at axis endpoints, tensorized
// in 2D. Nodes are ordered lexicographically, x-major:
//   index = ix * points(1) + iy.
class Grid {
public:
    static std::shared_ptr<const Grid> make(int dimension,
                                            std::vector<double> extents,
                                            std::vector<std::int64_t> points);

    int dimension() const { return dimension_; }
    std::int64_t node_count() const { return node_count_; }
    double volume() const { return volume_; }
    double extent(int axis) const { return extents_.at(static_cast<std::size_t>(axis)); }
    std::int64_t points(int axis) const { return points_.at(static_cast<std::size_t>(axis)); }
    double spacing(int axis) const { return spacing_.at(static_cast<std::size_t>(axis)); }

    const std::vector<double>& weights() const { return weights_; }
    double weight(std::int64_t i) const { return weights_[static_cast<std::size_t>(i)]; }

    // Node coordinates; y component is 0 in 1D.
    std::array<double, 2> coordinate(std::int64_t i) const;

    // Structural equality: same dimension, extents, and point counts.
    bool same_layout(const Grid& other) const;

private:
    Grid() = default;

    int dimension_ = 1;
    std::int64_t node_count_ = 0;
    double volume_ = 0.0;
    std::vector<double> extents_;
    std::vector<std::int64_t> points_;
    std::vector<double> spacing_;
    std::vector<double> weights_;
};

using GridPtr = std::shared_ptr<const Grid>;

} // namespace nfl
