#ifndef FRAGKIN_SOLVER_HPP
#define FRAGKIN_SOLVER_HPP

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "fragkin/grid.hpp"
#include "fragkin/kernels.hpp"
#include "fragkin/state.hpp"

namespace fragkin {

/// Collision kernel with the cutoff applied: equal to C on [1/n, n]^2,
/// multiplied per coordinate by a ramp that falls linearly in log(x) from 1
/// to 0 over a collar of log-width taper_fraction outside the box, and zero
/// beyond. Continuous, symmetric and everywhere <= C.
struct TruncatedKernelSet {
    CollisionKernelSpec base;
    double n = 1.0;
    double taper_fraction = 0.5;

    double evaluate(double x, double y) const;
};

TruncatedKernelSet truncate_kernel(const CollisionKernelSpec& spec, double n, double taper_fraction);

/// The certified constants of one contraction slab: M bounds both kernels on
/// the truncated box, L bounds the weighted norm a priori, t' and t'' are the
/// largest slab lengths at which the invariance and contraction inequalities
/// still hold, t0 = min(t', t'', T), and k < 1 is the contraction factor at t0.
struct ContractionEstimate {
    double M = 0.0;
    double L = 0.0;
    double t_prime = 0.0;
    double t_double_prime = 0.0;
    double t0 = 0.0;
    double k = 0.0;
};

enum class SlabPolicy {
    analytic_t0,  // march with the certified slab length (can be tiny)
    adaptive,     // double a trial slab while the measured iterate ratio < 1/2
};

struct SolverConfig {
    CollisionKernelSpec collision;
    FragmentationKernelSpec fragmentation;
    double n = 8.0;
    int cells_per_decade = 32;
    double taper_fraction = 0.5;
    WeightedNormParams norm;
    double horizon = 1.0;
    std::vector<double> output_times;  // empty: snapshots at 0 and horizon
    std::function<double(double)> initial_data;

    double picard_tol = 1e-10;
    int picard_max_iter = 200;
    int substeps = 16;         // trapezoid nodes per slab for the time integrals
    double max_substep = 0.0;  // cap on the trapezoid step; 0 = horizon / 8192
    SlabPolicy slab_policy = SlabPolicy::adaptive;
    bool cross_check = false;
    long max_slabs = 0;   // 0 = unlimited; otherwise stop after that many slabs
    double rk4_dt = 0.0;  // explicit-integrator step; 0 = horizon / 4096

    double substep_cap() const { return max_substep > 0.0 ? max_substep : horizon / 8192.0; }
};

/// Mass-conserving redistribution weights of one mother cell: W[i] is the
/// number density of daughters placed in cell i <= mother, normalized so that
/// sum_i pivot_i W[i] width_i equals the mother pivot exactly. The count
/// identity sum_i W[i] width_i = theta is enforced on top by blending toward
/// the extremal mass-exact distributions whenever nonnegative weights can
/// reach it; the ceiling is y / pivot_0, so mothers whose mean daughter size
/// falls below the first pivot keep only the mass identity.
struct FragmentWeights {
    std::vector<double> weights;   // length grid.size(), zero above the mother
    bool shattering_loss = false;  // daughters fell entirely below the floor
    bool count_exact = false;
};

FragmentWeights discretize_fragments(const FragmentationKernelSpec& fspec, const GeometricGrid& grid,
                                     std::size_t mother, std::size_t z);

/// Precomputed kernel tables for one (grid, collision, fragmentation) triple.
/// All evaluations are pure; reductions run in a fixed order so results are
/// identical regardless of where the calls happen.
class DiscreteSystem {
public:
    DiscreteSystem(std::shared_ptr<const GeometricGrid> grid, TruncatedKernelSet collision,
                   FragmentationKernelSpec fragmentation);

    const GeometricGrid& grid() const { return *grid_; }
    const std::shared_ptr<const GeometricGrid>& grid_ptr() const { return grid_; }
    const TruncatedKernelSet& collision() const { return collision_; }
    const FragmentationKernelSpec& fragmentation() const { return fragmentation_; }

    double collision_at(std::size_t i, std::size_t j) const { return cmat_[i * size_ + j]; }

    // integral of C(x_i, y) g(y) dy over the truncated domain
    double death_rate(std::span<const double> values, std::size_t cell) const;
    void death_all(std::span<const double> values, std::span<double> out) const;

    // double integral of C(y, z) F(x_i, y | z) g(y) g(z), discretized with the
    // mass-conserving fragment weights
    double gain_rate(std::span<const double> values, std::size_t cell) const;

    // gain for every cell, reusing the death integrals of the same state
    void gain_all(std::span<const double> values, std::span<const double> death,
                  std::span<double> out) const;

    // gain - death * g for all cells; optionally reports the mass flux lost
    // through the shattering channel (delta daughters below the floor).
    void rhs(std::span<const double> values, std::span<double> out,
             double* shatter_mass_rate = nullptr) const;

    double shatter_mass_rate(std::span<const double> values) const;
    bool has_shatter_channel() const { return has_lost_; }

private:
    std::shared_ptr<const GeometricGrid> grid_;
    TruncatedKernelSet collision_;
    FragmentationKernelSpec fragmentation_;
    std::size_t size_ = 0;
    std::vector<double> cmat_;               // C_n at pivot pairs, row major
    std::vector<std::vector<double>> frag_;  // per-mother weights; per (mother, z) for custom kernels
    std::vector<char> lost_;                 // shattering flags per mother
    bool z_dependent_ = false;
    bool has_lost_ = false;
};

// Spec-level wrappers operating on states.
double death_rate(const DensityState& state, const TruncatedKernelSet& kernel, std::size_t cell);
// same integral evaluated at an arbitrary size x rather than a cell pivot
double death_rate_at(const DensityState& state, const TruncatedKernelSet& kernel, double x);
double gain_rate(const DensityState& state, const TruncatedKernelSet& kernel,
                 const FragmentationKernelSpec& fspec, std::size_t cell);

// Evaluates the slab constants of the contraction argument for the given
// configuration and initial norms; throws unsupported_operation for kernels
// with no finite sup on the box (delta fragmentation). Conventions: the
// coupling constant of the norm-invariance inequality is k1 k2 (the product
// of the two envelope scales), g0_mass is the first moment of the initial
// data, and the ball radius entering the contraction inequality is B = 2L.
ContractionEstimate estimate_contraction(const SolverConfig& config, double g0_norm, double g0_mass);

struct SlabRecord {
    double t_start = 0.0;
    double length = 0.0;
    int iterations = 0;
    double k = 0.0;          // certified factor; NaN when no estimate was available
    double L = 0.0;          // certified norm bound of the slab; NaN when unavailable
    double max_ratio = 0.0;  // worst measured successive-iterate ratio
    double max_norm = 0.0;   // largest weighted norm over the iterates
    double shatter_loss = 0.0;
};

struct ShatterRecord {
    double time = 0.0;
    double lost_mass = 0.0;
};

struct ClampRecord {
    double time = 0.0;
    double magnitude = 0.0;  // mass removed by clamping negative cells
};

struct EventLog {
    std::vector<SlabRecord> slabs;
    std::vector<ShatterRecord> shattering;
    std::vector<ClampRecord> clamps;
    double total_shatter_loss = 0.0;
    bool slab_budget_exhausted = false;
};

// One application of the slab operator to an iterate given at the trapezoid
// nodes ((substeps + 1) x N, row-major, node-major): survival factor on the
// slab start data plus the exposure-weighted time integral of the gain.
// Returns the new iterate at the same nodes; every term is nonnegative.
std::vector<double> apply_slab_operator(std::span<const double> start,
                                        std::span<const double> iterate_nodes,
                                        const DiscreteSystem& system, const SolverConfig& config,
                                        double length);

// One fixed-point slab: the limit of g_a = C(g_{a-1}) on [t, t + t0] in
// operator form with survival factors, evaluated at the slab end. Nonnegative
// by construction. Throws convergence_error when the iteration budget is
// exhausted before the weighted-norm difference reaches picard_tol.
DensityState picard_slab_step(const DensityState& state, const SolverConfig& config,
                              const DiscreteSystem& system, const ContractionEstimate& estimate);

// Classical 4-stage explicit step of the truncated right-hand side; clamps
// negative cells to zero and records the clamped mass.
DensityState rk4_step(const DensityState& state, const DiscreteSystem& system, double dt,
                      EventLog* log = nullptr);

struct Trajectory {
    std::shared_ptr<const GeometricGrid> grid;
    std::vector<DensityState> snapshots;
    EventLog events;
    SolverConfig config;
};

// Marches [0, horizon] slab by slab, re-estimating the contraction constants
// from the current norms at every slab start, and emits snapshots at the
// configured output times.
Trajectory solve(const SolverConfig& config);
Trajectory solve(const SolverConfig& config, const DensityState& initial);

// Same trajectory computed with the independent explicit integrator.
Trajectory solve_rk4(const SolverConfig& config, const DensityState& initial);

}  // namespace fragkin

#endif
