#ifndef FRAGKIN_DIAGNOSTICS_HPP
#define FRAGKIN_DIAGNOSTICS_HPP

#include <optional>
#include <string>
#include <vector>

#include "fragkin/solver.hpp"

namespace fragkin {

/// One theorem-level bound checked along a trajectory. pass holds iff
/// observed <= bound * (1 + tol) at every snapshot; an infinite bound entry
/// (past a blow-up time) passes trivially.
struct BoundReport {
    std::string quantity;
    std::vector<double> times;
    std::vector<double> observed;
    std::vector<double> bound;
    double worst_margin = 0.0;  // max over snapshots of observed / bound - 1
    bool pass = true;
    bool skipped = false;
    std::string note;
};

// Max over snapshots of |N1(t) - N1(0)| / N1(0); 0 for a zero-mass start.
double mass_drift(const Trajectory& traj);

// Exact solution of B' = c (2B + S)^2, B(0) = B0, with c = k1 k2 / (1 - r)
// and S = N1bar + N2bar. Returns nullopt at and beyond the blow-up time
// 1 / (2 c (2 B0 + S)).
std::optional<double> riccati_envelope(double B0, double N1bar, double N2bar, double k1, double k2,
                                       double r, double t);

// Bound of the two-variable Gronwall lemma: (C3/C2)(e^{C2 t} - 1) + C0 e^{C2 t}.
double gronwall_envelope(double C0, double C2, double C3, double t);

// Checks along the trajectory: N1 constant, N2 non-increasing and below its
// start, N_{-r} below the Riccati envelope, N0 below the quadratic-growth
// envelope built from the fragment-count bound (skipped when no uniform
// count bound is configured).
std::vector<BoundReport> moment_bounds_check(const Trajectory& traj, double r, double tol = 1e-6);

// Phi(t): the uniqueness weight applied to |gA - gB| cell-wise, per snapshot.
// Both trajectories must share the grid and snapshot times.
std::vector<double> uniqueness_distance(const Trajectory& a, const Trajectory& b, double lambda,
                                        double theta);

struct RefinementRow {
    double n_coarse = 0.0;
    double n_fine = 0.0;
    double sup_diff = 0.0;    // sup over window pivots and snapshot times
    double moment_diff[3]{};  // |N0|, |N1|, |N2| differences on the window
};

struct RefinementTable {
    std::vector<double> n_list;
    std::vector<RefinementRow> rows;   // consecutive pairs
    std::vector<double> run_mass;      // conserved N1 per run (full domain)
    bool cauchy = true;                // consecutive sup-differences non-increasing
};

// Runs the scenario once per truncation index (initial data restricted to the
// common window and matched in discrete mass across grids), interpolates each
// zero-extended solution onto the finest grid piecewise-constant in log x,
// and tabulates consecutive differences. Runs are independent; threads > 1
// solves them in a small work pool without changing any result.
RefinementTable refinement_study(const SolverConfig& base, const std::vector<double>& n_list,
                                 double window_lo, double window_hi, int threads = 1);

}  // namespace fragkin

#endif
