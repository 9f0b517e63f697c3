// Batch front end: parse a scenario config, run the solver or one of the
// diagnostic suites, emit CSV/JSON artifacts.
//
// Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error,
// 3 solver convergence failure, 4 unexpected internal error.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fragkin/errors.hpp"
#include "fragkin/scenario.hpp"

namespace {

std::string resolve_out_dir(const fragkin::ScenarioConfig& cfg, const std::string& flag_out) {
    if (const char* env = std::getenv("FRAGKIN_OUT"); env && *env) return env;
    if (!flag_out.empty()) return flag_out;
    return cfg.output_dir;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fragkin - collision-induced fragmentation simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::vector<double> n_list;
    int threads = 1;
    unsigned long seed = 0;  // reserved; the solver is deterministic

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "scenario config file")->required();
        cmd->add_option("--out", out_dir, "output directory (FRAGKIN_OUT overrides)");
        cmd->add_option("--threads", threads, "worker threads for scenario batches")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--seed", seed, "reserved, unused");
    };

    CLI::App* run = app.add_subcommand("run", "solve the scenario and write trajectory artifacts");
    add_common(run);
    CLI::App* estimate =
        app.add_subcommand("estimate", "evaluate the contraction slab constants (M, L, t', t'', t0, k)");
    add_common(estimate);
    CLI::App* refine = app.add_subcommand("refine", "truncation refinement study over a list of n");
    add_common(refine);
    refine->add_option("--n-list", n_list, "comma-separated truncation indices")->delimiter(',');
    CLI::App* validate = app.add_subcommand("validate", "check the kernel hypotheses on the truncated domain");
    add_common(validate);

    CLI11_PARSE(app, argc, argv);

    try {
        const fragkin::ScenarioConfig cfg = fragkin::parse_scenario_file(config_path);
        const std::string out = resolve_out_dir(cfg, out_dir);
        if (run->parsed()) return fragkin::run_scenario(cfg, out);
        if (estimate->parsed()) return fragkin::estimate_scenario(cfg, out);
        if (refine->parsed()) return fragkin::refine_scenario(cfg, n_list, out, threads);
        if (validate->parsed()) return fragkin::validate_scenario(cfg, out);
        return 2;
    } catch (const fragkin::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const fragkin::convergence_error& e) {
        std::cerr << "convergence error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
