#pragma once

#include <string>
#include <vector>

#include "nfl/grid.hpp"

namespace nfl {

// One element of the truncated phase space: a sampled function on the grid,
// identically zero outside Omega. Values must stay finite; construction
// checks this so corrupt inputs fail loudly instead of propagating NaNs.
class Field {
public:
    Field(GridPtr grid, std::vector<double> values);

    // Zero field.
    explicit Field(GridPtr grid);

    const GridPtr& grid() const { return grid_; }
    std::int64_t size() const { return static_cast<std::int64_t>(values_.size()); }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }
    double operator[](std::int64_t i) const { return values_[static_cast<std::size_t>(i)]; }
    double& operator[](std::int64_t i) { return values_[static_cast<std::size_t>(i)]; }

private:
    GridPtr grid_;
    std::vector<double> values_;
};

// Weighted L^p norm, finite p >= 1: (sum_i w_i |u_i|^p)^(1/p).
double lp_norm(const Field& u, double p);

// Weighted L^p distance between fields on structurally equal grids.
double lp_distance(const Field& u, const Field& v, double p);

// Unweighted sup-norm gap max_i |u_i - v_i|.
double sup_norm_gap(const Field& u, const Field& v);

// CSV round trip. Header "x,value" (1D) or "x,y,value" (2D); doubles carry
// 17 significant digits so write -> read -> write is byte identical.
void write_field_csv(const Field& u, const std::string& path);
Field read_field_csv(const GridPtr& grid, const std::string& path);

} // namespace nfl
