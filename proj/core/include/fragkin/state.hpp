#ifndef FRAGKIN_STATE_HPP
#define FRAGKIN_STATE_HPP

#include <functional>
#include <memory>
#include <vector>

#include "fragkin/grid.hpp"

namespace fragkin {

/// Parameters of the weighted norm: integral of
///   (exp(lambda (1+x)) + exp(2 lambda) / x^r) |g(x)| dx
/// which controls the large-size tail and the singularity at 0 together.
struct WeightedNormParams {
    double lambda = 1.0;  // > 0
    double r = 0.5;       // in (0, 1)
};

/// Cell-wise number density on a grid. Value object: copies are independent,
/// reads are thread-safe, and solver steps own their state exclusively.
struct DensityState {
    std::shared_ptr<const GeometricGrid> grid;
    std::vector<double> values;  // number per unit size, one entry per cell
    double time = 0.0;
};

// Samples g0 at the cell pivots; densities outside [1/n, n] are implicitly
// zero. A negative sample is a domain error.
DensityState init_from_function(std::shared_ptr<const GeometricGrid> grid,
                                const std::function<double(double)>& g0);

// Moment N_p = integral of x^p g dx for p in (-1, inf); p <= -1 is rejected
// because the untruncated integral may diverge there.
double moment(const DensityState& state, double p);

double weighted_norm(const DensityState& state, const WeightedNormParams& params);

// The uniqueness weight exp(lambda x) + x^{-theta} applied to |g|. Requires
// theta >= 0 and theta + sigma < 1 for the collision singularity sigma in use.
double uniqueness_weight_norm(const DensityState& state, double lambda, double theta,
                              double sigma = 0.0);

}  // namespace fragkin

#endif
