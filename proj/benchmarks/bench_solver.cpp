#include <benchmark/benchmark.h>

#include <cmath>

#include <memory>
#include <vector>

#include "fragkin/solver.hpp"

namespace {

fragkin::SolverConfig base_config(int cells_per_decade) {
    fragkin::SolverConfig cfg;
    cfg.collision = fragkin::CollisionKernelSpec::singular_product(1.0, 0.5, 0.0);
    cfg.fragmentation = fragkin::FragmentationKernelSpec::powerlaw(0.0, 0.1);
    cfg.n = 8.0;
    cfg.cells_per_decade = cells_per_decade;
    cfg.norm = {1.0 / 9.0, 0.6};
    cfg.horizon = 0.1;
    cfg.picard_tol = 1e-10;
    return cfg;
}

fragkin::DensityState exp_state(const fragkin::SolverConfig& cfg) {
    auto grid = std::make_shared<const fragkin::GeometricGrid>(
        fragkin::build_grid(cfg.n, cfg.cells_per_decade));
    return fragkin::init_from_function(grid, [](double x) { return std::exp(-x); });
}

void BM_Rhs(benchmark::State& state) {
    auto cfg = base_config(static_cast<int>(state.range(0)));
    auto g = exp_state(cfg);
    fragkin::DiscreteSystem sys(g.grid, fragkin::truncate_kernel(cfg.collision, cfg.n, 0.5),
                                cfg.fragmentation);
    std::vector<double> out(g.values.size());
    for (auto _ : state) {
        sys.rhs(g.values, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetComplexityN(static_cast<long>(g.values.size()));
}
BENCHMARK(BM_Rhs)->Arg(8)->Arg(16)->Arg(32)->Arg(64)->Complexity();

void BM_PicardSlab(benchmark::State& state) {
    auto cfg = base_config(32);
    auto g = exp_state(cfg);
    fragkin::DiscreteSystem sys(g.grid, fragkin::truncate_kernel(cfg.collision, cfg.n, 0.5),
                                cfg.fragmentation);
    fragkin::ContractionEstimate est;
    est.t0 = 1e-3;
    for (auto _ : state) {
        auto next = fragkin::picard_slab_step(g, cfg, sys, est);
        benchmark::DoNotOptimize(next.values.data());
    }
}
BENCHMARK(BM_PicardSlab);

void BM_SolveShortRun(benchmark::State& state) {
    auto cfg = base_config(16);
    auto g = exp_state(cfg);
    for (auto _ : state) {
        auto traj = fragkin::solve(cfg, g);
        benchmark::DoNotOptimize(traj.snapshots.back().values.data());
    }
}
BENCHMARK(BM_SolveShortRun);

}  // namespace

BENCHMARK_MAIN();
