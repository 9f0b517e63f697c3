#include "fragkin/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fragkin {

GeometricGrid GeometricGrid::build(double n, int cells_per_decade) {
    if (!(n > 1.0))
        throw std::domain_error("grid truncation index must exceed 1, got " + std::to_string(n));
    if (cells_per_decade < 1)
        throw std::domain_error("cells_per_decade must be at least 1");

    const double decades = std::log10(n * n);
    const auto count = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(cells_per_decade * decades)));

    GeometricGrid g;
    g.n_ = n;
    g.cells_.reserve(count);
    const double ln_lo = std::log(1.0 / n);
    const double step = 2.0 * std::log(n) / static_cast<double>(count);
    double left = 1.0 / n;
    for (std::size_t i = 0; i < count; ++i) {
        // endpoints pinned exactly; interior edges from the log progression
        const double right = (i + 1 == count) ? n : std::exp(ln_lo + step * static_cast<double>(i + 1));
        g.cells_.push_back(Cell{left, right, std::sqrt(left * right)});
        left = right;
    }
    return g;
}

GeometricGrid GeometricGrid::from_edges(std::vector<double> edges) {
    if (edges.size() < 2) throw std::invalid_argument("from_edges needs at least two edges");
    for (std::size_t i = 0; i + 1 < edges.size(); ++i)
        if (!(edges[i] > 0.0) || !(edges[i] < edges[i + 1]))
            throw std::invalid_argument("edges must be positive and strictly increasing");

    GeometricGrid g;
    g.n_ = edges.back();
    g.cells_.reserve(edges.size() - 1);
    for (std::size_t i = 0; i + 1 < edges.size(); ++i)
        g.cells_.push_back(Cell{edges[i], edges[i + 1], std::sqrt(edges[i] * edges[i + 1])});
    return g;
}

double GeometricGrid::edge_ratio() const {
    return cells_.front().right / cells_.front().left;
}

std::size_t GeometricGrid::locate(double x) const {
    if (!(x >= lower()) || !(x <= upper()))
        throw std::out_of_range("size " + std::to_string(x) + " outside grid domain [" +
                                std::to_string(lower()) + ", " + std::to_string(upper()) + "]");
    if (x == upper()) return cells_.size() - 1;
    auto it = std::upper_bound(cells_.begin(), cells_.end(), x,
                               [](double v, const Cell& c) { return v < c.right; });
    return static_cast<std::size_t>(it - cells_.begin());
}

GeometricGrid build_grid(double n, int cells_per_decade) {
    return GeometricGrid::build(n, cells_per_decade);
}

std::size_t locate_cell(const GeometricGrid& grid, double x) {
    return grid.locate(x);
}

double quadrature(std::span<const double> values, const GeometricGrid& grid, double p) {
    if (values.size() != grid.size())
        throw std::invalid_argument("quadrature: values length " + std::to_string(values.size()) +
                                    " does not match cell count " + std::to_string(grid.size()));
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const Cell& c = grid[i];
        acc += std::pow(c.pivot, p) * values[i] * c.width();
    }
    return acc;
}

}  // namespace fragkin
