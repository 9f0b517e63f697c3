#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "fragkin/errors.hpp"
#include "fragkin/kernels.hpp"

using namespace fragkin;

TEST_CASE("collision presets evaluate as stated") {
    const auto c = CollisionKernelSpec::constant(1.0);
    CHECK(evaluate_collision(c, 0.3, 17.0) == 1.0);

    const auto s = CollisionKernelSpec::singular_product(1.0, 0.5, 0.0);
    CHECK(evaluate_collision(s, 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(evaluate_collision(s, 4.0, 1.0) == doctest::Approx(0.5).epsilon(1e-15));

    CHECK_THROWS_AS(evaluate_collision(c, 0.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(evaluate_collision(c, 1.0, -2.0), std::domain_error);
}

TEST_CASE("collision symmetry is exact for every built-in family") {
    std::vector<CollisionKernelSpec> specs = {
        CollisionKernelSpec::constant(2.0),
        CollisionKernelSpec::singular_product(1.5, 0.5, 1.0),
        CollisionKernelSpec::brownian(1.0),
        CollisionKernelSpec::cheng_redner(1, -0.5, 1.0),
        CollisionKernelSpec::cheng_redner(2, 0.5, 1.0),
        CollisionKernelSpec::cheng_redner(3, -0.5, 1.0, 1e3),
    };
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (const auto& spec : specs) {
        for (int i = 0; i < 10000; ++i) {
            const double x = std::pow(10.0, u(rng));
            const double y = std::pow(10.0, u(rng));
            CHECK(evaluate_collision(spec, x, y) - evaluate_collision(spec, y, x) == 0.0);
        }
    }
}

TEST_CASE("singular_product attains its envelope with equality") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (double sigma : {0.0, 0.25, 0.5})
        for (double nu : {0.0, 1.0}) {
            const auto spec = CollisionKernelSpec::singular_product(1.3, sigma, nu);
            for (int i = 0; i < 200; ++i) {
                const double x = std::pow(10.0, u(rng));
                const double y = std::pow(10.0, u(rng));
                const double bound = spec.k1 * std::pow(1.0 + x, nu) * std::pow(1.0 + y, nu) *
                                     std::pow(x * y, -sigma);
                CHECK(evaluate_collision(spec, x, y) == doctest::Approx(bound).epsilon(1e-14));
            }
        }
}

TEST_CASE("brownian kernel formula and envelope") {
    const auto b = CollisionKernelSpec::brownian(1.0);
    // (x^{1/3} + y^{1/3})(x^{-1/3} + y^{-1/3}) at (1, 8): (1 + 2)(1 + 1/2)
    CHECK(evaluate_collision(b, 1.0, 8.0) == doctest::Approx(4.5).epsilon(1e-14));
    CHECK(b.k1 == 4.0);
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    for (int i = 0; i < 2000; ++i) {
        const double x = std::pow(10.0, u(rng)), y = std::pow(10.0, u(rng));
        const double bound =
            b.k1 * std::pow(1.0 + x, b.nu) * std::pow(1.0 + y, b.nu) * std::pow(x * y, -b.sigma);
        CHECK(evaluate_collision(b, x, y) <= bound * (1.0 + 1e-12));
    }
}

TEST_CASE("Cheng-Redner models follow the printed branches") {
    const auto m1 = CollisionKernelSpec::cheng_redner(1, 1.0, 1.0);
    CHECK(evaluate_collision(m1, 4.0, 9.0) == doctest::Approx(6.0).epsilon(1e-14));

    const auto m2 = CollisionKernelSpec::cheng_redner(2, 1.0, 1.0);
    CHECK(evaluate_collision(m2, 2.0, 5.0) == 5.0);  // bigger breaks
    CHECK(evaluate_collision(m2, 5.0, 2.0) == 5.0);
    CHECK(evaluate_collision(m2, 3.0, 3.0) == 3.0);  // tie resolved by the otherwise branch

    const auto m3 = CollisionKernelSpec::cheng_redner(3, 1.0, 1.0);
    CHECK(evaluate_collision(m3, 2.0, 5.0) == 2.0);  // smaller breaks
    CHECK(evaluate_collision(m3, 5.0, 2.0) == 2.0);

    // negative homogeneity makes model 3 singular along one axis: the
    // envelope constant must be sized for a truncated domain
    CHECK_THROWS_AS(CollisionKernelSpec::cheng_redner(3, -0.5, 1.0), std::domain_error);
    const auto m3s = CollisionKernelSpec::cheng_redner(3, -0.5, 1.0, 8.0);
    CHECK(m3s.k1 == doctest::Approx(std::pow(8.0, 0.5)).epsilon(1e-14));
    CHECK(m3s.sigma == doctest::Approx(0.25).epsilon(1e-15));
    CHECK_THROWS_AS(CollisionKernelSpec::cheng_redner(1, 2.5, 1.0), std::domain_error);
    CHECK_THROWS_AS(CollisionKernelSpec::cheng_redner(4, 0.5, 1.0), std::domain_error);
}

TEST_CASE("fragmentation pointwise values and support") {
    const auto f0 = FragmentationKernelSpec::powerlaw(0.0);
    CHECK(evaluate_fragmentation(f0, 1.0, 2.0, 5.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(evaluate_fragmentation(f0, 3.0, 2.0, 5.0) == 0.0);  // support x <= y

    const auto f1 = FragmentationKernelSpec::powerlaw(1.0);
    CHECK(evaluate_fragmentation(f1, 0.5, 1.0, 1.0) == doctest::Approx(1.5).epsilon(1e-15));

    CHECK_THROWS_AS(evaluate_fragmentation(f0, 0.0, 1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(evaluate_fragmentation(FragmentationKernelSpec::half_split(), 0.5, 1.0, 1.0),
                    unsupported_operation);
    CHECK_THROWS_AS(FragmentationKernelSpec::powerlaw(-1.0), std::domain_error);
}

TEST_CASE("fragment_count closed forms") {
    const auto f0 = FragmentationKernelSpec::powerlaw(0.0);
    CHECK(fragment_count(f0, 3.0, 1.0) == doctest::Approx(2.0).epsilon(1e-15));
    const auto f1 = FragmentationKernelSpec::powerlaw(1.0);
    CHECK(fragment_count(f1, 0.2, 7.0) == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(fragment_count(FragmentationKernelSpec::half_split(), 0.4, 2.0) == 2.0);

    // divergent custom kernel is detected by the quadrature
    const auto bad = FragmentationKernelSpec::custom(
        [](double x, double, double) { return 1.0 / (x * x); }, 1.0, 0.0, 0.0);
    CHECK_THROWS_AS(fragment_count(bad, 1.0, 1.0), model_error);
}

TEST_CASE("daughter mass identity holds on both evaluation routes") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (double alpha : {0.0, 1.0, -0.3}) {
        const auto f = FragmentationKernelSpec::powerlaw(alpha);
        for (int i = 0; i < 100; ++i) {
            const double y = std::pow(10.0, u(rng));
            const double z = std::pow(10.0, u(rng));
            CHECK(std::abs(fragment_mass_integral(f, y, z) / y - 1.0) <= 1e-10);
            CHECK(std::abs(fragment_mass_integral_quadrature(f, y, z) / y - 1.0) <= 1e-6);
        }
    }
}

TEST_CASE("verify_hypotheses on a compliant singular pair") {
    const auto c = CollisionKernelSpec::singular_product(1.0, 0.5, 0.0);
    auto f = FragmentationKernelSpec::powerlaw(0.0, 0.25);
    const auto report = verify_hypotheses(c, f, {0.125, 8.0}, 500, 1e-9);
    CHECK(report.all_pass());
    CHECK(report.find("symmetry")->pass);
    CHECK(report.find("collision-envelope")->pass);
    CHECK(report.find("daughter-mass-identity")->pass);
    CHECK(report.find("fragment-count-bound")->pass);
}

TEST_CASE("verify_hypotheses fragmentation envelope with the stated scale") {
    // F y^beta = 2 y^{beta-1} peaks at y = 1/8, matching k2 = 2 sqrt(8)
    const auto c = CollisionKernelSpec::singular_product(1.0, 0.5, 0.0);
    auto f = FragmentationKernelSpec::powerlaw(0.0, 0.5);
    f.k2 = 2.0 * std::sqrt(8.0);
    const auto report = verify_hypotheses(c, f, {0.125, 8.0}, 500, 1e-9);
    const auto* env = report.find("fragmentation-envelope");
    REQUIRE(env != nullptr);
    CHECK(env->applicable);
    CHECK(env->pass);
    CHECK(env->worst_ratio == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("verify_hypotheses flags a domain-limited envelope checked too widely") {
    // k2 sized for [1/8, 8] does not cover smaller mothers; the failure entry
    // carries the domain-of-validity note
    const auto c = CollisionKernelSpec::singular_product(1.0, 0.5, 0.0);
    auto f = FragmentationKernelSpec::powerlaw(0.0, 0.25);
    f.k2 = f.bound_scale_on(8.0);
    const auto report = verify_hypotheses(c, f, {1.0 / 80.0, 80.0}, 800, 1e-9);
    const auto* env = report.find("fragmentation-envelope");
    REQUIRE(env != nullptr);
    CHECK_FALSE(env->pass);
    CHECK(env->worst_ratio > 1.0);
    CHECK(env->note.find("truncated domains") != std::string::npos);
}

TEST_CASE("verify_hypotheses reports an asymmetry witness") {
    const auto bad = CollisionKernelSpec::custom([](double x, double) { return x; }, 1.0, 0.0, 1.0);
    const auto f = FragmentationKernelSpec::powerlaw(0.0);
    const auto report = verify_hypotheses(bad, f, {0.5, 2.0}, 200, 1e-9);
    const auto* sym = report.find("symmetry");
    REQUIRE(sym != nullptr);
    CHECK_FALSE(sym->pass);
    CHECK(sym->worst_point[0] != sym->worst_point[1]);
    CHECK_FALSE(report.all_pass());
}

TEST_CASE("verify_hypotheses marks delta kernels inapplicable for the envelope") {
    const auto c = CollisionKernelSpec::constant(1.0);
    const auto report = verify_hypotheses(c, FragmentationKernelSpec::half_split(), {0.5, 2.0}, 100, 1e-9);
    const auto* env = report.find("fragmentation-envelope");
    REQUIRE(env != nullptr);
    CHECK_FALSE(env->applicable);
    CHECK(report.all_pass());  // inapplicable checks do not fail the report
}
