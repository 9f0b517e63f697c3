#ifndef FRAGKIN_SCENARIO_HPP
#define FRAGKIN_SCENARIO_HPP

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fragkin/solver.hpp"

namespace fragkin {

/// Everything a batch run needs, parsed from a flat sectioned key = value
/// file. All quantities are dimensionless. Parsing re-validates every
/// module-level precondition with line- and field-addressed messages.
struct ScenarioConfig {
    // [collision]
    std::string collision_family = "constant";
    double k1 = 1.0;
    double sigma = 0.0;
    double nu = 0.0;
    double xi = 0.0;

    // [fragmentation]
    std::string fragmentation_family = "powerlaw";
    double alpha = 0.0;
    double beta = 0.0;
    double k2 = 0.0;  // 0: derive from the truncated domain
    std::optional<double> theta_max;

    // [grid]
    double n = 8.0;
    int cells_per_decade = 32;
    double taper_fraction = 0.5;

    // [initial]
    std::string preset = "exp";  // exp | monodisperse | powerlaw-cutoff
    double amplitude = 1.0;
    double rate = 1.0;      // exp: amplitude * exp(-rate x)
    double x0 = 1.0;        // monodisperse spike location
    double exponent = 1.0;  // powerlaw-cutoff: x^-exponent * exp(-x / cutoff)
    double cutoff = 1.0;
    std::optional<double> normalize_moment;  // rescale so moment(p) = normalize_value
    double normalize_value = 1.0;

    // [time]
    double horizon = 1.0;
    std::vector<double> output_times;

    // [norm]
    double lambda = 0.5;
    double r = 0.6;

    // [uniqueness]
    double lambda_u = 0.1;
    double theta_u = 0.2;

    // [solver]
    double picard_tol = 1e-10;
    int picard_max_iter = 200;
    int substeps = 16;
    double max_substep = 0.0;
    std::string slab_policy = "adaptive";  // adaptive | analytic-t0
    bool cross_check = false;
    long max_slabs = 0;
    double rk4_dt = 0.0;

    // [diagnostics]
    double mass_drift_tol = 1e-6;
    double bounds_tol = 1e-6;
    double cross_check_tol = 1e-3;

    // [output]
    std::string output_dir = "out";

    bool operator==(const ScenarioConfig&) const = default;

    CollisionKernelSpec collision_spec() const;
    FragmentationKernelSpec fragmentation_spec() const;
    SolverConfig solver_config() const;
    DensityState build_initial(std::shared_ptr<const GeometricGrid> grid) const;
};

ScenarioConfig parse_scenario_text(const std::string& text, const std::string& origin = "<config>");
ScenarioConfig parse_scenario_file(const std::string& path);
std::string serialize_scenario(const ScenarioConfig& cfg);

// Batch entry points shared by the command-line tool and the tests. Each
// writes its artifacts under out_dir and returns the process exit status:
// 0 on success (all enabled checks green), 1 when a check fails, 2 for
// configuration errors, 3 for solver convergence failures.
int run_scenario(const ScenarioConfig& cfg, const std::string& out_dir);
int estimate_scenario(const ScenarioConfig& cfg, const std::string& out_dir);
int refine_scenario(const ScenarioConfig& cfg, const std::vector<double>& n_list,
                    const std::string& out_dir, int threads = 1);
int validate_scenario(const ScenarioConfig& cfg, const std::string& out_dir);

}  // namespace fragkin

#endif
