#include "fragkin/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "fragkin/diagnostics.hpp"
#include "fragkin/errors.hpp"
#include "fragkin/io.hpp"

namespace fragkin {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_number(const std::string& v, int line, const std::string& field) {
    const std::string t = trim(v);
    double out = 0.0;
    const char* begin = t.data();
    const char* end = t.data() + t.size();
    auto res = std::from_chars(begin, end, out);
    if (res.ec != std::errc() || res.ptr != end)
        throw config_error("expected a number, got '" + t + "'", line, field);
    return out;
}

long parse_integer(const std::string& v, int line, const std::string& field) {
    const std::string t = trim(v);
    long out = 0;
    auto res = std::from_chars(t.data(), t.data() + t.size(), out);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size())
        throw config_error("expected an integer, got '" + t + "'", line, field);
    return out;
}

bool parse_bool(const std::string& v, int line, const std::string& field) {
    const std::string t = trim(v);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw config_error("expected a boolean, got '" + t + "'", line, field);
}

std::vector<double> parse_list(const std::string& v, int line, const std::string& field) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(parse_number(item, line, field));
    }
    return out;
}

}  // namespace

ScenarioConfig parse_scenario_text(const std::string& text, const std::string& origin) {
    ScenarioConfig cfg;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int lineno = 0;

    int beta_line = 0, theta_line = 0, r_line = 0;

    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw config_error("unterminated section header '" + line + "'", lineno);
            section = trim(line.substr(1, line.size() - 2));
            static const char* known[] = {"collision", "fragmentation", "grid",    "initial",
                                          "time",      "norm",          "uniqueness", "solver",
                                          "diagnostics", "output"};
            if (std::find_if(std::begin(known), std::end(known),
                             [&](const char* k) { return section == k; }) == std::end(known))
                throw config_error("unknown section '" + section + "'", lineno);
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("expected 'key = value', got '" + line + "'", lineno);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const std::string field = section + "." + key;

        auto num = [&]() { return parse_number(value, lineno, field); };
        auto integer = [&]() { return parse_integer(value, lineno, field); };

        if (section == "collision") {
            if (key == "family") cfg.collision_family = value;
            else if (key == "k1") {
                cfg.k1 = num();
                if (!(cfg.k1 > 0.0)) throw config_error("k1 must be positive", lineno, field);
            } else if (key == "sigma") {
                cfg.sigma = num();
                if (!(cfg.sigma >= 0.0 && cfg.sigma <= 0.5))
                    throw config_error("sigma must lie in [0, 1/2]", lineno, field);
            } else if (key == "nu") {
                cfg.nu = num();
                if (!(cfg.nu >= 0.0 && cfg.nu <= 1.0))
                    throw config_error("nu must lie in [0, 1]", lineno, field);
            } else if (key == "xi") cfg.xi = num();
            else throw config_error("unknown key '" + key + "'", lineno, field);
        } else if (section == "fragmentation") {
            if (key == "family") cfg.fragmentation_family = value;
            else if (key == "alpha") {
                cfg.alpha = num();
                if (!(cfg.alpha > -1.0)) throw config_error("alpha must exceed -1", lineno, field);
            } else if (key == "beta") {
                cfg.beta = num();
                beta_line = lineno;
                if (cfg.beta < 0.0) throw config_error("beta must be nonnegative", lineno, field);
            } else if (key == "k2") {
                cfg.k2 = num();
                if (cfg.k2 < 0.0) throw config_error("k2 must be nonnegative", lineno, field);
            } else if (key == "theta_max") {
                cfg.theta_max = num();
                if (!(*cfg.theta_max > 0.0)) throw config_error("theta_max must be positive", lineno, field);
            } else throw config_error("unknown key '" + key + "'", lineno, field);
        } else if (section == "grid") {
            if (key == "n") {
                cfg.n = num();
                if (!(cfg.n > 1.0)) throw config_error("n must exceed 1", lineno, field);
            } else if (key == "cells_per_decade") {
                cfg.cells_per_decade = static_cast<int>(integer());
                if (cfg.cells_per_decade < 1)
                    throw config_error("cells_per_decade must be at least 1", lineno, field);
            } else if (key == "taper_fraction") {
                cfg.taper_fraction = num();
                if (!(cfg.taper_fraction > 0.0 && cfg.taper_fraction <= 1.0))
                    throw config_error("taper_fraction must lie in (0, 1]", lineno, field);
            } else throw config_error("unknown key '" + key + "'", lineno, field);
        } else if (section == "initial") {
            if (key == "preset") cfg.preset = value;
            else if (key == "amplitude") {
                cfg.amplitude = num();
                if (cfg.amplitude < 0.0) throw config_error("amplitude must be nonnegative", lineno, field);
            } else if (key == "rate") cfg.rate = num();
            else if (key == "x0") {
                cfg.x0 = num();
                if (!(cfg.x0 > 0.0)) throw config_error("x0 must be positive", lineno, field);
            } else if (key == "exponent") cfg.exponent = num();
            else if (key == "cutoff") {
                cfg.cutoff = num();
                if (!(cfg.cutoff > 0.0)) throw config_error("cutoff must be positive", lineno, field);
            } else if (key == "normalize_moment") cfg.normalize_moment = num();
            else if (key == "normalize_value") {
                cfg.normalize_value = num();
                if (!(cfg.normalize_value > 0.0))
                    throw config_error("normalize_value must be positive", lineno, field);
            } else throw config_error("unknown key '" + key + "'", lineno, field);
        } else if (section == "time") {
            if (key == "horizon") {
                cfg.horizon = num();
                if (cfg.horizon < 0.0) throw config_error("horizon must be nonnegative", lineno, field);
            } else if (key == "output_times") cfg.output_times = parse_list(value, lineno, field);
            else throw config_error("unknown key '" + key + "'", lineno, field);
        } else if (section == "norm") {
            if (key == "lambda") {
                cfg.lambda = num();
                if (!(cfg.lambda > 0.0)) throw config_error("lambda must be positive", lineno, field);
            } else if (key == "r") {
                cfg.r = num();
                r_line = lineno;
                if (!(cfg.r > 0.0 && cfg.r < 1.0))
                    throw config_error("r must lie in (0, 1)", lineno, field);
            } else throw config_error("unknown key '" + key + "'", lineno, field);
        } else if (section == "uniqueness") {
            if (key == "lambda_u") {
                cfg.lambda_u = num();
                if (cfg.lambda_u < 0.0) throw config_error("lambda_u must be nonnegative", lineno, field);
            } else if (key == "theta") {
                cfg.theta_u = num();
                theta_line = lineno;
                if (cfg.theta_u < 0.0) throw config_error("theta must be nonnegative", lineno, field);
            } else throw config_error("unknown key '" + key + "'", lineno, field);
        } else if (section == "solver") {
            if (key == "picard_tol") {
                cfg.picard_tol = num();
                if (!(cfg.picard_tol > 0.0)) throw config_error("picard_tol must be positive", lineno, field);
            } else if (key == "picard_max_iter") {
                cfg.picard_max_iter = static_cast<int>(integer());
                if (cfg.picard_max_iter < 1)
                    throw config_error("picard_max_iter must be at least 1", lineno, field);
            } else if (key == "substeps") {
                cfg.substeps = static_cast<int>(integer());
                if (cfg.substeps < 1) throw config_error("substeps must be at least 1", lineno, field);
            } else if (key == "max_substep") {
                cfg.max_substep = num();
                if (cfg.max_substep < 0.0) throw config_error("max_substep must be nonnegative", lineno, field);
            } else if (key == "slab_policy") {
                if (value != "adaptive" && value != "analytic-t0")
                    throw config_error("slab_policy must be 'adaptive' or 'analytic-t0'", lineno, field);
                cfg.slab_policy = value;
            } else if (key == "cross_check") cfg.cross_check = parse_bool(value, lineno, field);
            else if (key == "max_slabs") {
                cfg.max_slabs = integer();
                if (cfg.max_slabs < 0) throw config_error("max_slabs must be nonnegative", lineno, field);
            } else if (key == "rk4_dt") {
                cfg.rk4_dt = num();
                if (cfg.rk4_dt < 0.0) throw config_error("rk4_dt must be nonnegative", lineno, field);
            } else throw config_error("unknown key '" + key + "'", lineno, field);
        } else if (section == "diagnostics") {
            if (key == "mass_drift_tol") cfg.mass_drift_tol = num();
            else if (key == "bounds_tol") cfg.bounds_tol = num();
            else if (key == "cross_check_tol") cfg.cross_check_tol = num();
            else throw config_error("unknown key '" + key + "'", lineno, field);
        } else if (section == "output") {
            if (key == "directory") cfg.output_dir = value;
            else throw config_error("unknown key '" + key + "'", lineno, field);
        } else {
            throw config_error("key '" + key + "' appears before any section", lineno);
        }
    }

    // cross-field admissibility
    static const char* cfams[] = {"constant", "singular-product", "brownian",
                                  "cr-model-1", "cr-model-2", "cr-model-3"};
    if (std::find_if(std::begin(cfams), std::end(cfams), [&](const char* f) {
            return cfg.collision_family == f;
        }) == std::end(cfams))
        throw config_error("unknown collision family '" + cfg.collision_family + "'", 0,
                           "collision.family");
    if (cfg.fragmentation_family != "powerlaw" && cfg.fragmentation_family != "half-split")
        throw config_error("unknown fragmentation family '" + cfg.fragmentation_family + "'", 0,
                           "fragmentation.family");
    if (cfg.preset != "exp" && cfg.preset != "monodisperse" && cfg.preset != "powerlaw-cutoff")
        throw config_error("unknown initial preset '" + cfg.preset + "'", 0, "initial.preset");
    if (cfg.beta > cfg.sigma)
        throw config_error("beta must lie in [0, sigma]", beta_line, "fragmentation.beta");
    if (cfg.sigma + cfg.beta > cfg.r)
        throw config_error("sigma + beta must not exceed r", r_line, "norm.r");
    if (!(cfg.theta_u + cfg.sigma < 1.0))
        throw config_error("theta + sigma must be below 1", theta_line, "uniqueness.theta");
    for (double t : cfg.output_times)
        if (t < 0.0 || t > cfg.horizon)
            throw config_error("output time " + format_double(t) + " outside [0, horizon]", 0,
                               "time.output_times");
    // validate derived kernels early so the CLI reports them as config errors
    try {
        (void)cfg.collision_spec();
        (void)cfg.fragmentation_spec();
    } catch (const std::exception& e) {
        throw config_error(std::string(e.what()) + " (" + origin + ")");
    }
    return cfg;
}

ScenarioConfig parse_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario_text(ss.str(), path);
}

std::string serialize_scenario(const ScenarioConfig& c) {
    std::ostringstream o;
    o << "[collision]\n"
      << "family = " << c.collision_family << "\n"
      << "k1 = " << format_double(c.k1) << "\n"
      << "sigma = " << format_double(c.sigma) << "\n"
      << "nu = " << format_double(c.nu) << "\n"
      << "xi = " << format_double(c.xi) << "\n\n";
    o << "[fragmentation]\n"
      << "family = " << c.fragmentation_family << "\n"
      << "alpha = " << format_double(c.alpha) << "\n"
      << "beta = " << format_double(c.beta) << "\n"
      << "k2 = " << format_double(c.k2) << "\n";
    if (c.theta_max) o << "theta_max = " << format_double(*c.theta_max) << "\n";
    o << "\n[grid]\n"
      << "n = " << format_double(c.n) << "\n"
      << "cells_per_decade = " << c.cells_per_decade << "\n"
      << "taper_fraction = " << format_double(c.taper_fraction) << "\n\n";
    o << "[initial]\n"
      << "preset = " << c.preset << "\n"
      << "amplitude = " << format_double(c.amplitude) << "\n"
      << "rate = " << format_double(c.rate) << "\n"
      << "x0 = " << format_double(c.x0) << "\n"
      << "exponent = " << format_double(c.exponent) << "\n"
      << "cutoff = " << format_double(c.cutoff) << "\n";
    if (c.normalize_moment) o << "normalize_moment = " << format_double(*c.normalize_moment) << "\n";
    o << "normalize_value = " << format_double(c.normalize_value) << "\n\n";
    o << "[time]\n"
      << "horizon = " << format_double(c.horizon) << "\n";
    if (!c.output_times.empty()) {
        o << "output_times = ";
        for (std::size_t i = 0; i < c.output_times.size(); ++i)
            o << (i ? ", " : "") << format_double(c.output_times[i]);
        o << "\n";
    }
    o << "\n[norm]\n"
      << "lambda = " << format_double(c.lambda) << "\n"
      << "r = " << format_double(c.r) << "\n\n";
    o << "[uniqueness]\n"
      << "lambda_u = " << format_double(c.lambda_u) << "\n"
      << "theta = " << format_double(c.theta_u) << "\n\n";
    o << "[solver]\n"
      << "picard_tol = " << format_double(c.picard_tol) << "\n"
      << "picard_max_iter = " << c.picard_max_iter << "\n"
      << "substeps = " << c.substeps << "\n"
      << "max_substep = " << format_double(c.max_substep) << "\n"
      << "slab_policy = " << c.slab_policy << "\n"
      << "cross_check = " << (c.cross_check ? "true" : "false") << "\n"
      << "max_slabs = " << c.max_slabs << "\n"
      << "rk4_dt = " << format_double(c.rk4_dt) << "\n\n";
    o << "[diagnostics]\n"
      << "mass_drift_tol = " << format_double(c.mass_drift_tol) << "\n"
      << "bounds_tol = " << format_double(c.bounds_tol) << "\n"
      << "cross_check_tol = " << format_double(c.cross_check_tol) << "\n\n";
    o << "[output]\n"
      << "directory = " << c.output_dir << "\n";
    return o.str();
}

CollisionKernelSpec ScenarioConfig::collision_spec() const {
    if (collision_family == "constant") return CollisionKernelSpec::constant(k1);
    if (collision_family == "singular-product")
        return CollisionKernelSpec::singular_product(k1, sigma, nu);
    if (collision_family == "brownian") return CollisionKernelSpec::brownian(k1);
    if (collision_family == "cr-model-1") return CollisionKernelSpec::cheng_redner(1, xi, k1, n);
    if (collision_family == "cr-model-2") return CollisionKernelSpec::cheng_redner(2, xi, k1, n);
    if (collision_family == "cr-model-3") return CollisionKernelSpec::cheng_redner(3, xi, k1, n);
    throw config_error("unknown collision family '" + collision_family + "'");
}

FragmentationKernelSpec ScenarioConfig::fragmentation_spec() const {
    FragmentationKernelSpec f;
    if (fragmentation_family == "powerlaw") {
        f = FragmentationKernelSpec::powerlaw(alpha, beta, k2 > 0.0 ? k2 : 0.0);
        if (f.k2 == 0.0) f.k2 = f.bound_scale_on(n);
    } else if (fragmentation_family == "half-split") {
        f = FragmentationKernelSpec::half_split();
    } else {
        throw config_error("unknown fragmentation family '" + fragmentation_family + "'");
    }
    if (theta_max) f.theta_max = *theta_max;
    return f;
}

SolverConfig ScenarioConfig::solver_config() const {
    SolverConfig sc;
    sc.collision = collision_spec();
    sc.fragmentation = fragmentation_spec();
    sc.n = n;
    sc.cells_per_decade = cells_per_decade;
    sc.taper_fraction = taper_fraction;
    sc.norm = WeightedNormParams{lambda, r};
    sc.horizon = horizon;
    sc.output_times = output_times;
    sc.picard_tol = picard_tol;
    sc.picard_max_iter = picard_max_iter;
    sc.substeps = substeps;
    sc.max_substep = max_substep;
    sc.slab_policy = slab_policy == "analytic-t0" ? SlabPolicy::analytic_t0 : SlabPolicy::adaptive;
    sc.cross_check = cross_check;
    sc.max_slabs = max_slabs;
    sc.rk4_dt = rk4_dt;

    if (preset == "exp") {
        const double a = amplitude, b = rate;
        sc.initial_data = [a, b](double x) { return a * std::exp(-b * x); };
    } else if (preset == "powerlaw-cutoff") {
        const double a = amplitude, e = exponent, xc = cutoff;
        sc.initial_data = [a, e, xc](double x) { return a * std::pow(x, -e) * std::exp(-x / xc); };
    } else {  // monodisperse: spike one log-cell wide, count = amplitude
        const double cells = std::max(2.0, std::ceil(cells_per_decade * std::log10(n * n)));
        const double wlog = 2.0 * std::log(n) / cells;
        const double a = amplitude, c = x0;
        sc.initial_data = [a, c, wlog](double x) {
            return std::abs(std::log(x / c)) < 0.5 * wlog ? a / (x * wlog) : 0.0;
        };
    }
    return sc;
}

DensityState ScenarioConfig::build_initial(std::shared_ptr<const GeometricGrid> grid) const {
    DensityState g0 = init_from_function(std::move(grid), solver_config().initial_data);
    if (normalize_moment) {
        const double m = moment(g0, *normalize_moment);
        if (!(m > 0.0))
            throw config_error("cannot normalize: moment of order " +
                               format_double(*normalize_moment) + " is zero");
        const double scale = normalize_value / m;
        for (double& v : g0.values) v *= scale;
    }
    return g0;
}

namespace {

std::string trajectory_csv(const Trajectory& traj) {
    std::ostringstream o;
    o << "time";
    for (const Cell& c : traj.grid->cells()) o << "," << format_double(c.pivot);
    o << "\n";
    for (const auto& s : traj.snapshots) {
        o << format_double(s.time);
        for (double v : s.values) o << "," << format_double(v);
        o << "\n";
    }
    return o.str();
}

std::string moments_csv(const Trajectory& traj, double r) {
    std::ostringstream o;
    o << "time,N_minus_r,N0,N1,N2\n";
    for (const auto& s : traj.snapshots) {
        o << format_double(s.time) << "," << format_double(moment(s, -r)) << ","
          << format_double(moment(s, 0.0)) << "," << format_double(moment(s, 1.0)) << ","
          << format_double(moment(s, 2.0)) << "\n";
    }
    return o.str();
}

ordered_json events_json(const EventLog& ev) {
    ordered_json j;
    j["slabs"] = ordered_json::array();
    for (const auto& s : ev.slabs) {
        ordered_json js;
        js["t_start"] = s.t_start;
        js["length"] = s.length;
        js["iterations"] = s.iterations;
        if (std::isnan(s.k))
            js["k"] = nullptr;
        else
            js["k"] = s.k;
        if (std::isnan(s.L))
            js["L"] = nullptr;
        else
            js["L"] = s.L;
        js["max_ratio"] = s.max_ratio;
        js["max_norm"] = s.max_norm;
        js["shatter_loss"] = s.shatter_loss;
        j["slabs"].push_back(js);
    }
    j["shattering"] = ordered_json::array();
    for (const auto& s : ev.shattering) j["shattering"].push_back({{"time", s.time}, {"lost_mass", s.lost_mass}});
    j["clamps"] = ordered_json::array();
    for (const auto& c : ev.clamps) j["clamps"].push_back({{"time", c.time}, {"magnitude", c.magnitude}});
    j["total_shatter_loss"] = ev.total_shatter_loss;
    j["slab_budget_exhausted"] = ev.slab_budget_exhausted;
    return j;
}

ordered_json bound_json(const BoundReport& b) {
    ordered_json j;
    j["name"] = b.quantity;
    j["pass"] = b.pass;
    j["skipped"] = b.skipped;
    j["worst_margin"] = b.worst_margin;
    if (!b.note.empty()) j["note"] = b.note;
    j["times"] = b.times;
    j["observed"] = b.observed;
    ordered_json bounds = ordered_json::array();
    for (double v : b.bound) {
        if (std::isinf(v))
            bounds.push_back("inf");
        else
            bounds.push_back(v);
    }
    j["bound"] = bounds;
    return j;
}

}  // namespace

int run_scenario(const ScenarioConfig& cfg, const std::string& out_dir) {
    SolverConfig sc = cfg.solver_config();
    auto grid = std::make_shared<const GeometricGrid>(build_grid(sc.n, sc.cells_per_decade));
    DensityState g0 = cfg.build_initial(grid);

    Trajectory traj;
    try {
        traj = solve(sc, g0);
    } catch (const convergence_error& e) {
        std::cerr << "solver did not converge: " << e.what() << "\n";
        return 3;
    }

    atomic_write(out_dir + "/trajectory.csv", trajectory_csv(traj));
    atomic_write(out_dir + "/moments.csv", moments_csv(traj, cfg.r));
    atomic_write(out_dir + "/events.json", events_json(traj.events).dump(2) + "\n");

    const double drift = mass_drift(traj);
    const auto bounds = moment_bounds_check(traj, cfg.r, cfg.bounds_tol);
    bool pass = drift <= cfg.mass_drift_tol;
    for (const auto& b : bounds) pass = pass && (b.skipped || b.pass);

    ordered_json diag;
    diag["mass_drift"] = {{"value", drift}, {"tol", cfg.mass_drift_tol}, {"pass", drift <= cfg.mass_drift_tol}};
    diag["bounds"] = ordered_json::array();
    for (const auto& b : bounds) diag["bounds"].push_back(bound_json(b));

    if (cfg.cross_check && traj.events.slab_budget_exhausted) {
        diag["cross_check"] = {{"skipped", true}, {"reason", "run truncated by the slab budget"}};
    } else if (cfg.cross_check) {
        Trajectory twin;
        try {
            twin = solve_rk4(sc, g0);
        } catch (const convergence_error& e) {
            std::cerr << "cross-check integrator failed: " << e.what() << "\n";
            return 3;
        }
        double sup_rel = 0.0;
        for (std::size_t s = 0; s < traj.snapshots.size() && s < twin.snapshots.size(); ++s) {
            double d = 0.0, m = 0.0;
            for (std::size_t i = 0; i < traj.snapshots[s].values.size(); ++i) {
                d = std::max(d, std::abs(traj.snapshots[s].values[i] - twin.snapshots[s].values[i]));
                m = std::max({m, traj.snapshots[s].values[i], twin.snapshots[s].values[i]});
            }
            if (m > 0.0) sup_rel = std::max(sup_rel, d / m);
        }
        const auto phi = uniqueness_distance(traj, twin, cfg.lambda_u, cfg.theta_u);
        double phi_over_psi = 0.0;
        for (std::size_t s = 0; s < phi.size(); ++s) {
            DensityState sum = traj.snapshots[s];
            for (std::size_t i = 0; i < sum.values.size(); ++i)
                sum.values[i] += twin.snapshots[s].values[i];
            const double psi = uniqueness_weight_norm(sum, cfg.lambda_u, cfg.theta_u, cfg.sigma);
            if (psi > 0.0) phi_over_psi = std::max(phi_over_psi, phi[s] / psi);
        }
        const bool cc_pass = sup_rel <= cfg.cross_check_tol && phi_over_psi <= cfg.cross_check_tol;
        diag["cross_check"] = {{"sup_rel_diff", sup_rel},
                               {"phi_over_psi_max", phi_over_psi},
                               {"tol", cfg.cross_check_tol},
                               {"pass", cc_pass}};
        pass = pass && cc_pass;
    }

    diag["overall_pass"] = pass;
    atomic_write(out_dir + "/diagnostics.json", diag.dump(2) + "\n");
    return pass ? 0 : 1;
}

int estimate_scenario(const ScenarioConfig& cfg, const std::string& out_dir) {
    SolverConfig sc = cfg.solver_config();
    auto grid = std::make_shared<const GeometricGrid>(build_grid(sc.n, sc.cells_per_decade));
    DensityState g0 = cfg.build_initial(grid);

    ContractionEstimate est;
    try {
        est = estimate_contraction(sc, weighted_norm(g0, sc.norm), moment(g0, 1.0));
    } catch (const unsupported_operation& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    ordered_json j;
    j["M"] = est.M;
    j["L"] = est.L;
    j["t_prime"] = std::isinf(est.t_prime) ? ordered_json("inf") : ordered_json(est.t_prime);
    j["t_double_prime"] =
        std::isinf(est.t_double_prime) ? ordered_json("inf") : ordered_json(est.t_double_prime);
    j["t0"] = est.t0;
    j["k"] = est.k;
    const std::string text = j.dump(2) + "\n";
    std::cout << text;
    atomic_write(out_dir + "/estimate.json", text);
    return 0;
}

int refine_scenario(const ScenarioConfig& cfg, const std::vector<double>& n_list,
                    const std::string& out_dir, int threads) {
    std::vector<double> ns = n_list;
    if (ns.empty()) ns.push_back(cfg.n);
    std::sort(ns.begin(), ns.end());
    ns.erase(std::unique(ns.begin(), ns.end()), ns.end());

    SolverConfig sc = cfg.solver_config();
    const double window_lo = 1.0 / ns.front();
    const double window_hi = ns.front();

    ordered_json j;
    j["n_list"] = ns;
    j["window"] = {window_lo, window_hi};

    if (ns.size() < 2) {
        j["rows"] = ordered_json::array();
        j["cauchy"] = true;
        atomic_write(out_dir + "/refine.json", j.dump(2) + "\n");
        return 0;
    }

    RefinementTable table;
    try {
        table = refinement_study(sc, ns, window_lo, window_hi, threads);
    } catch (const convergence_error& e) {
        std::cerr << "refinement run did not converge: " << e.what() << "\n";
        return 3;
    }

    j["rows"] = ordered_json::array();
    for (const auto& row : table.rows) {
        j["rows"].push_back({{"n_coarse", row.n_coarse},
                             {"n_fine", row.n_fine},
                             {"sup_diff", row.sup_diff},
                             {"dN0", row.moment_diff[0]},
                             {"dN1", row.moment_diff[1]},
                             {"dN2", row.moment_diff[2]}});
    }
    j["run_mass"] = table.run_mass;
    j["cauchy"] = table.cauchy;
    atomic_write(out_dir + "/refine.json", j.dump(2) + "\n");
    return table.cauchy ? 0 : 1;
}

int validate_scenario(const ScenarioConfig& cfg, const std::string& out_dir) {
    const auto cspec = cfg.collision_spec();
    const auto fspec = cfg.fragmentation_spec();
    const auto report =
        verify_hypotheses(cspec, fspec, Interval{1.0 / cfg.n, cfg.n}, 2000, cfg.bounds_tol);

    ordered_json j;
    j["checks"] = ordered_json::array();
    for (const auto& c : report.checks) {
        ordered_json jc;
        jc["name"] = c.name;
        jc["applicable"] = c.applicable;
        jc["pass"] = c.pass;
        jc["worst_ratio"] = c.worst_ratio;
        jc["worst_point"] = {c.worst_point[0], c.worst_point[1], c.worst_point[2]};
        if (!c.note.empty()) jc["note"] = c.note;
        j["checks"].push_back(jc);
        std::cout << (c.applicable ? (c.pass ? "pass " : "FAIL ") : "skip ") << c.name;
        if (c.applicable)
            std::cout << "  worst ratio " << format_double(c.worst_ratio) << " at ("
                      << format_double(c.worst_point[0]) << ", " << format_double(c.worst_point[1])
                      << ", " << format_double(c.worst_point[2]) << ")";
        if (!c.note.empty()) std::cout << "  [" << c.note << "]";
        std::cout << "\n";
    }
    j["all_pass"] = report.all_pass();
    atomic_write(out_dir + "/validate.json", j.dump(2) + "\n");
    return report.all_pass() ? 0 : 1;
}

}  // namespace fragkin
