#include "fragkin/state.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fragkin {

DensityState init_from_function(std::shared_ptr<const GeometricGrid> grid,
                                const std::function<double(double)>& g0) {
    if (!grid) throw std::invalid_argument("init_from_function: null grid");
    DensityState s;
    s.grid = std::move(grid);
    s.values.reserve(s.grid->size());
    for (const Cell& c : s.grid->cells()) {
        const double v = g0(c.pivot);
        if (!(v >= 0.0))
            throw std::domain_error("initial data is negative at x = " + std::to_string(c.pivot));
        s.values.push_back(v);
    }
    s.time = 0.0;
    return s;
}

double moment(const DensityState& state, double p) {
    if (!(p > -1.0))
        throw std::domain_error("moment order must lie in (-1, inf), got " + std::to_string(p));
    return quadrature(state.values, *state.grid, p);
}

double weighted_norm(const DensityState& state, const WeightedNormParams& params) {
    if (!(params.lambda > 0.0)) throw std::domain_error("norm weight lambda must be positive");
    if (!(params.r > 0.0 && params.r < 1.0)) throw std::domain_error("norm weight r must lie in (0, 1)");
    const double e2l = std::exp(2.0 * params.lambda);
    double acc = 0.0;
    for (std::size_t i = 0; i < state.values.size(); ++i) {
        const Cell& c = (*state.grid)[i];
        const double w = std::exp(params.lambda * (1.0 + c.pivot)) + e2l * std::pow(c.pivot, -params.r);
        acc += w * std::abs(state.values[i]) * c.width();
    }
    return acc;
}

double uniqueness_weight_norm(const DensityState& state, double lambda, double theta, double sigma) {
    if (!(lambda >= 0.0)) throw std::domain_error("uniqueness weight lambda must be nonnegative");
    if (!(theta >= 0.0)) throw std::invalid_argument("uniqueness weight theta must be nonnegative");
    if (!(theta + sigma < 1.0))
        throw std::invalid_argument("uniqueness weight requires theta + sigma < 1, got theta = " +
                                    std::to_string(theta) + ", sigma = " + std::to_string(sigma));
    double acc = 0.0;
    for (std::size_t i = 0; i < state.values.size(); ++i) {
        const Cell& c = (*state.grid)[i];
        const double w = std::exp(lambda * c.pivot) + std::pow(c.pivot, -theta);
        acc += w * std::abs(state.values[i]) * c.width();
    }
    return acc;
}

}  // namespace fragkin
