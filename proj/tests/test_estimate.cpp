#include <doctest.h>

#include <cmath>
#include <limits>

#include "fragkin/errors.hpp"
#include "fragkin/solver.hpp"

using namespace fragkin;

namespace {

SolverConfig estimate_config(double k1, double n) {
    SolverConfig cfg;
    cfg.collision = CollisionKernelSpec::constant(k1);
    cfg.fragmentation = FragmentationKernelSpec::powerlaw(0.0);
    cfg.n = n;
    cfg.cells_per_decade = 16;
    cfg.norm = {1.0, 0.6};
    cfg.horizon = 1.0;
    return cfg;
}

}  // namespace

TEST_CASE("slab constants against a direct formula scan") {
    const auto cfg = estimate_config(1.0, 2.0);
    const auto est = estimate_contraction(cfg, 1.0, 1.0);

    // independent transcription of the constants
    const double n = 2.0, lambda = 1.0, r = 0.6, T = 1.0;
    const double M = 4.0;  // sup F = (alpha+2) n dominates sup C = 1
    CHECK(est.M == doctest::Approx(M).epsilon(1e-12));
    const double Lam = std::exp(lambda * (1.0 + n)) / lambda +
                       std::exp(2.0 * lambda) * std::pow(n, 1.0 - r) / (1.0 - r);
    const double L = 1.0 + Lam * M * M * T * 1.0;
    CHECK(est.L == doctest::Approx(L).epsilon(1e-12));

    const double K1 = 1.0 * 2.0 * n;  // k1 k2 with the domain-sized envelope scale
    const double B = 2.0 * L;
    auto lhs_inv = [&](double t) { return std::exp(2.0 * t * M * L) * (1.0 + 4.0 * L * K1 * t * Lam); };
    auto lhs_con = [&](double t) {
        return std::exp(t * B * M) * (M * t * 1.0 + K1 * Lam * (M * t * t * B * B + 2.0 * B * t));
    };

    // scan on a fine 1-D grid brackets the reported slab lengths
    const double dt = est.t_prime / 4096.0;
    CHECK(lhs_inv(est.t_prime - dt) < 2.0);
    CHECK(lhs_inv(est.t_prime + dt) >= 2.0 - 1e-12);
    CHECK(lhs_con(est.t_double_prime - dt) < 1.0);
    CHECK(lhs_con(est.t_double_prime + dt) >= 1.0 - 1e-12);

    CHECK(est.t0 == doctest::Approx(std::min({est.t_prime, est.t_double_prime, T})).epsilon(1e-15));
    CHECK(est.k < 1.0);
    CHECK(est.k == doctest::Approx(lhs_con(est.t0)).epsilon(1e-10));
}

TEST_CASE("zero kernels give an unconstrained slab") {
    SolverConfig cfg;
    cfg.collision = CollisionKernelSpec::custom([](double, double) { return 0.0; }, 0.0, 0.0, 0.0);
    cfg.fragmentation =
        FragmentationKernelSpec::custom([](double, double, double) { return 0.0; }, 0.0, 0.0, 1.0);
    cfg.n = 4.0;
    cfg.cells_per_decade = 8;
    cfg.norm = {0.5, 0.6};
    cfg.horizon = 3.0;
    const auto est = estimate_contraction(cfg, 1.0, 1.0);
    CHECK(est.M == 0.0);
    CHECK(std::isinf(est.t_prime));
    CHECK(std::isinf(est.t_double_prime));
    CHECK(est.t0 == 3.0);
    CHECK(est.k == 0.0);
}

TEST_CASE("slab length is monotone in the collision scale") {
    double prev_t0 = std::numeric_limits<double>::infinity();
    for (double k1 : {1.0, 2.0, 4.0}) {
        const auto est = estimate_contraction(estimate_config(k1, 2.0), 1.0, 1.0);
        CHECK(est.t0 <= prev_t0 + 1e-18);
        prev_t0 = est.t0;
    }
}

TEST_CASE("slab length is non-increasing in the truncation index") {
    double prev_t0 = std::numeric_limits<double>::infinity();
    for (double n : {2.0, 4.0, 8.0}) {
        const auto est = estimate_contraction(estimate_config(1.0, n), 1.0, 1.0);
        CHECK(est.t0 <= prev_t0 + 1e-18);
        prev_t0 = est.t0;
    }
}

TEST_CASE("delta kernels have no analytic slab constants") {
    auto cfg = estimate_config(1.0, 2.0);
    cfg.fragmentation = FragmentationKernelSpec::half_split();
    CHECK_THROWS_AS(estimate_contraction(cfg, 1.0, 1.0), unsupported_operation);
}

TEST_CASE("measured iterate ratios stay below the certified factor") {
    // run a few analytic slabs and compare the recorded ratios against k
    SolverConfig cfg = estimate_config(1.0, 2.0);
    cfg.cells_per_decade = 8;
    cfg.horizon = 0.5;
    cfg.slab_policy = SlabPolicy::analytic_t0;
    cfg.max_slabs = 10;
    cfg.picard_tol = 1e-13;
    cfg.initial_data = [](double x) { return std::exp(-x); };
    const auto traj = solve(cfg);
    CHECK(traj.events.slab_budget_exhausted);
    REQUIRE(traj.events.slabs.size() == 10);
    for (const auto& slab : traj.events.slabs) {
        CHECK(slab.k < 1.0);
        CHECK(slab.max_ratio <= slab.k + 1e-12);
    }
}
