#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "fragkin/errors.hpp"
#include "fragkin/scenario.hpp"

using namespace fragkin;
namespace fs = std::filesystem;

namespace {

std::string tmp_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("fragkin_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const char* kSmallScenario = R"(
[collision]
family = constant
k1 = 1.0

[fragmentation]
family = powerlaw
alpha = 0

[grid]
n = 4
cells_per_decade = 8

[initial]
preset = exp
normalize_moment = 0
normalize_value = 1

[time]
horizon = 0.2
output_times = 0, 0.1, 0.2

[norm]
lambda = 0.2
r = 0.6

[solver]
picard_tol = 1e-11
cross_check = true
)";

}  // namespace

TEST_CASE("parser defaults and validation messages") {
    const auto cfg = parse_scenario_text("[grid]\nn = 4\n");
    CHECK(cfg.n == 4.0);
    CHECK(cfg.collision_family == "constant");
    CHECK(cfg.slab_policy == "adaptive");

    CHECK_THROWS_WITH_AS(parse_scenario_text("[collision]\nsigma = 0.7\n"),
                         doctest::Contains("sigma must lie in [0, 1/2]"), config_error);
    CHECK_THROWS_WITH_AS(parse_scenario_text("[collision]\nnu = 2\n"),
                         doctest::Contains("nu must lie in [0, 1]"), config_error);
    CHECK_THROWS_WITH_AS(parse_scenario_text("[grid]\nn = 0.5\n"), doctest::Contains("n must exceed 1"),
                         config_error);
    CHECK_THROWS_WITH_AS(parse_scenario_text("[grid]\nbogus = 1\n"), doctest::Contains("unknown key"),
                         config_error);
    CHECK_THROWS_WITH_AS(parse_scenario_text("[nope]\n"), doctest::Contains("unknown section"),
                         config_error);
    CHECK_THROWS_WITH_AS(parse_scenario_text("x = 1\n"), doctest::Contains("before any section"),
                         config_error);
    CHECK_THROWS_WITH_AS(parse_scenario_text("[grid]\nn 4\n"), doctest::Contains("key = value"),
                         config_error);

    // line numbers point at the offending entry
    try {
        parse_scenario_text("[collision]\nk1 = 1\nsigma = 0.9\n");
        FAIL("expected config_error");
    } catch (const config_error& e) {
        CHECK(e.line == 3);
        CHECK(e.field == "collision.sigma");
    }

    // cross-field admissibility
    CHECK_THROWS_WITH_AS(
        parse_scenario_text("[collision]\nsigma = 0.2\n[fragmentation]\nbeta = 0.3\n"),
        doctest::Contains("beta must lie in [0, sigma]"), config_error);
    CHECK_THROWS_WITH_AS(
        parse_scenario_text("[collision]\nsigma = 0.4\n[fragmentation]\nbeta = 0.4\n[norm]\nr = 0.7\n"),
        doctest::Contains("sigma + beta must not exceed r"), config_error);
    CHECK_THROWS_WITH_AS(
        parse_scenario_text("[collision]\nsigma = 0.5\n[uniqueness]\ntheta = 0.6\n"),
        doctest::Contains("theta + sigma must be below 1"), config_error);
    CHECK_THROWS_WITH_AS(
        parse_scenario_text("[time]\nhorizon = 1\noutput_times = 0, 2\n"),
        doctest::Contains("outside [0, horizon]"), config_error);
}

TEST_CASE("round trip: serialize then reparse") {
    auto cfg = parse_scenario_text(kSmallScenario);
    cfg.theta_max = 2.0;
    cfg.output_times = {0.0, 0.02, 0.2};
    const auto again = parse_scenario_text(serialize_scenario(cfg));
    CHECK(again == cfg);
}

TEST_CASE("initial presets and normalization") {
    const auto cfg = parse_scenario_text(kSmallScenario);
    auto grid = std::make_shared<const GeometricGrid>(build_grid(cfg.n, cfg.cells_per_decade));
    const auto g0 = cfg.build_initial(grid);
    CHECK(moment(g0, 0.0) == doctest::Approx(1.0).epsilon(1e-12));

    auto mono = cfg;
    mono.preset = "monodisperse";
    mono.x0 = 1.0;
    mono.amplitude = 3.0;
    mono.normalize_moment.reset();
    const auto spike = mono.build_initial(grid);
    int populated = 0;
    for (double v : spike.values) populated += v != 0.0;
    CHECK(populated == 1);
    CHECK(moment(spike, 0.0) == doctest::Approx(3.0).epsilon(0.05));

    auto pc = cfg;
    pc.preset = "powerlaw-cutoff";
    pc.exponent = 1.5;
    pc.cutoff = 2.0;
    const auto s = pc.build_initial(grid);
    CHECK(moment(s, 0.0) == doctest::Approx(1.0).epsilon(1e-12));  // still normalized
}

TEST_CASE("run_scenario writes the artifact set") {
    const auto cfg = parse_scenario_text(kSmallScenario);
    const std::string out = tmp_dir("run");
    CHECK(run_scenario(cfg, out) == 0);
    for (const char* f : {"trajectory.csv", "moments.csv", "events.json", "diagnostics.json"})
        CHECK(fs::exists(fs::path(out) / f));

    const std::string traj = slurp(out + "/trajectory.csv");
    CHECK(std::count(traj.begin(), traj.end(), '\n') == 4);  // header + three snapshots
    const std::string header = traj.substr(0, traj.find('\n'));
    CHECK(header.substr(0, 5) == std::string("time,"));

    // horizon zero: exactly one data row
    auto cfg0 = cfg;
    cfg0.horizon = 0.0;
    cfg0.output_times.clear();
    cfg0.cross_check = false;
    const std::string out0 = tmp_dir("run0");
    CHECK(run_scenario(cfg0, out0) == 0);
    const std::string traj0 = slurp(out0 + "/trajectory.csv");
    CHECK(std::count(traj0.begin(), traj0.end(), '\n') == 2);
}

TEST_CASE("run_scenario output is byte-identical across invocations") {
    const auto cfg = parse_scenario_text(kSmallScenario);
    const std::string a = tmp_dir("det_a");
    const std::string b = tmp_dir("det_b");
    CHECK(run_scenario(cfg, a) == 0);
    CHECK(run_scenario(cfg, b) == 0);
    CHECK(slurp(a + "/trajectory.csv") == slurp(b + "/trajectory.csv"));
    CHECK(slurp(a + "/moments.csv") == slurp(b + "/moments.csv"));
    CHECK(slurp(a + "/diagnostics.json") == slurp(b + "/diagnostics.json"));
}

TEST_CASE("run_scenario maps convergence failure to exit 3") {
    auto cfg = parse_scenario_text(kSmallScenario);
    cfg.picard_max_iter = 1;
    cfg.picard_tol = 1e-300;  // unreachable: the iteration budget always runs out
    cfg.cross_check = false;
    CHECK(run_scenario(cfg, tmp_dir("noconv")) == 3);
}

TEST_CASE("estimate_scenario reports a contracting slab") {
    const auto cfg = parse_scenario_text(kSmallScenario);
    const std::string out = tmp_dir("est");
    CHECK(estimate_scenario(cfg, out) == 0);
    const std::string text = slurp(out + "/estimate.json");
    CHECK(text.find("\"k\"") != std::string::npos);

    // the certified slab never grows when the domain does
    double prev_t0 = 1e300;
    for (double n : {2.0, 4.0, 8.0}) {
        auto c = cfg;
        c.n = n;
        const std::string o = tmp_dir("est_n");
        CHECK(estimate_scenario(c, o) == 0);
        const std::string j = slurp(o + "/estimate.json");
        const auto pos = j.find("\"t0\": ");
        REQUIRE(pos != std::string::npos);
        const double t0 = std::stod(j.substr(pos + 6));
        CHECK(t0 <= prev_t0);
        prev_t0 = t0;
    }
}

TEST_CASE("refine_scenario emits the convergence table") {
    auto cfg = parse_scenario_text(kSmallScenario);
    cfg.cross_check = false;
    const std::string out = tmp_dir("refine");
    CHECK(refine_scenario(cfg, {4.0, 8.0}, out, 2) == 0);
    const std::string j = slurp(out + "/refine.json");
    CHECK(j.find("sup_diff") != std::string::npos);

    // thread-count variations leave the artifact byte-identical
    const std::string out_serial = tmp_dir("refine_serial");
    CHECK(refine_scenario(cfg, {4.0, 8.0}, out_serial, 1) == 0);
    CHECK(slurp(out_serial + "/refine.json") == j);

    // a single n yields an empty table and success
    const std::string out1 = tmp_dir("refine1");
    CHECK(refine_scenario(cfg, {}, out1, 1) == 0);
    CHECK(slurp(out1 + "/refine.json").find("\"rows\": []") != std::string::npos);
}

TEST_CASE("validate_scenario passes compliant kernels and flags planted defects") {
    const auto cfg = parse_scenario_text(kSmallScenario);
    const std::string out = tmp_dir("validate");
    CHECK(validate_scenario(cfg, out) == 0);

    auto singular = cfg;
    singular.collision_family = "singular-product";
    singular.sigma = 0.5;
    singular.beta = 0.25;
    CHECK(validate_scenario(singular, tmp_dir("validate_s")) == 0);
}

TEST_CASE("Cheng-Redner scenario runs end to end") {
    auto cfg = parse_scenario_text(kSmallScenario);
    cfg.collision_family = "cr-model-3";
    cfg.xi = -0.5;  // singular branch: the envelope constant is domain-sized
    cfg.sigma = 0.25;
    cfg.horizon = 0.05;
    cfg.output_times = {0.0, 0.05};
    cfg.cross_check = false;
    CHECK(validate_scenario(cfg, tmp_dir("cr_val")) == 0);
    CHECK(run_scenario(cfg, tmp_dir("cr_run")) == 0);

    auto half = parse_scenario_text(kSmallScenario);
    half.fragmentation_family = "half-split";
    half.horizon = 0.05;
    half.output_times = {0.0, 0.05};
    half.cross_check = false;
    half.mass_drift_tol = 1.0;  // the small domain sheds mass through the floor
    CHECK(run_scenario(half, tmp_dir("half_run")) == 0);
}
