#include "nfl/field.hpp"

#include <cmath>

#include "nfl/csv.hpp"
#include "nfl/util.hpp"

namespace nfl {

namespace {

void require_same_grid(const Field& u, const Field& v) {
    if (u.grid().get() == v.grid().get()) return;
    if (!u.grid()->same_layout(*v.grid()))
        throw config_error("fields live on different grids");
}

void require_exponent(double p) {
    if (!std::isfinite(p) || p < 1.0)
        throw config_error("norm exponent p must be finite and >= 1");
}

} // namespace

Field::Field(GridPtr grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) throw config_error("field needs a grid");
    if (static_cast<std::int64_t>(values_.size()) != grid_->node_count())
        throw config_error("field value count does not match grid node count");
    for (std::size_t i = 0; i < values_.size(); ++i)
        if (!std::isfinite(values_[i]))
            throw config_error("non-finite field value at node " + std::to_string(i));
}

Field::Field(GridPtr grid) : grid_(std::move(grid)) {
    if (!grid_) throw config_error("field needs a grid");
    values_.assign(static_cast<std::size_t>(grid_->node_count()), 0.0);
}

double lp_norm(const Field& u, double p) {
    require_exponent(p);
    const auto& w = u.grid()->weights();
    const auto& v = u.values();
    KahanSum sum;
    if (p == 1.0) {
        for (std::size_t i = 0; i < v.size(); ++i) sum.add(w[i] * std::abs(v[i]));
        return sum.value();
    }
    if (p == 2.0) {
        for (std::size_t i = 0; i < v.size(); ++i) sum.add(w[i] * v[i] * v[i]);
        return std::sqrt(sum.value());
    }
    for (std::size_t i = 0; i < v.size(); ++i) sum.add(w[i] * std::pow(std::abs(v[i]), p));
    return std::pow(sum.value(), 1.0 / p);
}

double lp_distance(const Field& u, const Field& v, double p) {
    require_exponent(p);
    require_same_grid(u, v);
    const auto& w = u.grid()->weights();
    const auto& a = u.values();
    const auto& b = v.values();
    KahanSum sum;
    if (p == 2.0) {
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double d = a[i] - b[i];
            sum.add(w[i] * d * d);
        }
        return std::sqrt(sum.value());
    }
    for (std::size_t i = 0; i < a.size(); ++i)
        sum.add(w[i] * std::pow(std::abs(a[i] - b[i]), p));
    return std::pow(sum.value(), 1.0 / p);
}

double sup_norm_gap(const Field& u, const Field& v) {
    require_same_grid(u, v);
    const auto& a = u.values();
    const auto& b = v.values();
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

void write_field_csv(const Field& u, const std::string& path) {
    auto out = open_output(path);
    const auto& grid = *u.grid();
    out << (grid.dimension() == 1 ? "x,value\n" : "x,y,value\n");
    for (std::int64_t i = 0; i < u.size(); ++i) {
        const auto xy = grid.coordinate(i);
        out << format_double(xy[0]);
        if (grid.dimension() == 2) out << ',' << format_double(xy[1]);
        out << ',' << format_double(u[i]) << '\n';
    }
    if (!out) throw config_error("write failed: " + path);
}

Field read_field_csv(const GridPtr& grid, const std::string& path) {
    auto in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) throw config_error(path + ": empty field file");
    const std::string expected = grid->dimension() == 1 ? "x,value" : "x,y,value";
    if (line != expected)
        throw config_error(path + ": bad header '" + line + "', expected '" + expected + "'");

    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(grid->node_count()));
    const std::size_t coord_cols = static_cast<std::size_t>(grid->dimension());
    std::int64_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto tokens = split_csv_line(line);
        if (tokens.size() != coord_cols + 1)
            throw config_error(path + ": wrong column count on data row " + std::to_string(row + 1));
        if (row >= grid->node_count())
            throw config_error(path + ": more rows than grid nodes");
        const auto xy = grid->coordinate(row);
        for (std::size_t c = 0; c < coord_cols; ++c) {
            const double got = parse_double(tokens[c], path);
            if (std::abs(got - xy[c]) > 1e-12 * std::max(1.0, std::abs(xy[c])))
                throw config_error(path + ": coordinate mismatch on data row " + std::to_string(row + 1));
        }
        values.push_back(parse_double(tokens[coord_cols], path));
        ++row;
    }
    if (row != grid->node_count())
        throw config_error(path + ": expected " + std::to_string(grid->node_count()) +
                           " rows, found " + std::to_string(row));
    return Field(grid, std::move(values));
}

} // namespace nfl
