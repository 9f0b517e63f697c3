#ifndef FRAGKIN_GRID_HPP
#define FRAGKIN_GRID_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace fragkin {

struct Cell {
    double left;
    double right;
    double pivot;  // geometric mean of the edges

    double width() const { return right - left; }
};

/// Geometric (log-uniform) partition of the truncated size domain [1/n, n].
/// Edges form a geometric progression with constant ratio q = (n^2)^(1/cells),
/// so the product of all edge ratios telescopes to n^2.
class GeometricGrid {
public:
    // cell_count = ceil(cells_per_decade * log10(n^2)), at least 2.
    static GeometricGrid build(double n, int cells_per_decade);

    // Unchecked construction from explicit edges; used by tests and by the
    // refinement interpolation. Invariants of build() are not enforced.
    static GeometricGrid from_edges(std::vector<double> edges);

    double truncation() const { return n_; }
    double lower() const { return cells_.front().left; }
    double upper() const { return cells_.back().right; }
    double edge_ratio() const;

    std::size_t size() const { return cells_.size(); }
    const Cell& operator[](std::size_t i) const { return cells_[i]; }
    const std::vector<Cell>& cells() const { return cells_; }

    // Index of the cell with left <= x < right; the last cell is closed on
    // the right. Throws std::out_of_range for x outside [lower, upper].
    std::size_t locate(double x) const;

private:
    GeometricGrid() = default;

    double n_ = 1.0;
    std::vector<Cell> cells_;
};

GeometricGrid build_grid(double n, int cells_per_decade);

std::size_t locate_cell(const GeometricGrid& grid, double x);

// Midpoint-in-log rule: sum_i pivot_i^p * values_i * width_i, approximating
// the integral of x^p g(x) over [1/n, n].
double quadrature(std::span<const double> values, const GeometricGrid& grid, double p);

}  // namespace fragkin

#endif
