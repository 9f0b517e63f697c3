#ifndef FRAGKIN_KERNELS_HPP
#define FRAGKIN_KERNELS_HPP

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace fragkin {

enum class CollisionFamily {
    constant,
    singular_product,
    smoluchowski_brownian,
    cheng_redner_i,
    cheng_redner_ii,
    cheng_redner_iii,
    custom,
};

/// Symmetric collision rate C(x, y) together with the constants (k1, sigma, nu)
/// of its envelope k1 (1+x)^nu (1+y)^nu / (xy)^sigma. For the singular_product
/// family the envelope is the kernel itself, so the bound is attained with
/// equality. Specs are immutable after construction and evaluation is pure.
struct CollisionKernelSpec {
    CollisionFamily family = CollisionFamily::constant;
    double k1 = 1.0;     // envelope scale
    double sigma = 0.0;  // singularity exponent, in [0, 1/2]
    double nu = 0.0;     // growth exponent, in [0, 1]
    double xi = 0.0;     // homogeneity index (Cheng-Redner families only)
    double rate_scale = 1.0;
    std::function<double(double, double)> custom_eval;
    std::string bound_note;  // set when (k1, sigma, nu) only cover a truncated domain

    static CollisionKernelSpec constant(double k1);
    static CollisionKernelSpec singular_product(double k1, double sigma, double nu);
    // scale * (x^{1/3} + y^{1/3})(x^{-1/3} + y^{-1/3}); envelope k1 = 4 scale,
    // sigma = 1/3, nu = 2/3.
    static CollisionKernelSpec brownian(double scale);
    // model 1: (xy)^{xi/2}, both clusters break.
    // model 2: max(x,y)^xi, the bigger cluster breaks.
    // model 3: min(x,y)^xi, the smaller cluster breaks; for xi < 0 the envelope
    //          only holds on [1/n, n], so domain_n is required to size k1.
    static CollisionKernelSpec cheng_redner(int model, double xi, double scale, double domain_n = 0.0);
    static CollisionKernelSpec custom(std::function<double(double, double)> eval,
                                      double k1, double sigma, double nu);
};

enum class FragmentationFamily {
    powerlaw,
    half_split_delta,
    custom,
};

/// Breakage distribution F(x, y | z): density of daughters of size x from a
/// mother of size y broken in a collision with z. Carries the envelope
/// constants (k2, beta) of F <= k2 / y^beta and a uniform bound theta_max on
/// the fragment count.
struct FragmentationKernelSpec {
    FragmentationFamily family = FragmentationFamily::powerlaw;
    double alpha = 0.0;      // powerlaw shape, F = (alpha+2) x^alpha / y^{alpha+1}
    double k2 = 0.0;         // envelope scale; 0 means "derive from the domain"
    double beta = 0.0;       // envelope exponent, 0 <= beta <= sigma
    double theta_max = 0.0;  // uniform fragment-count bound; 0 means unknown
    std::function<double(double, double, double)> custom_eval;
    std::string validity_note;

    static FragmentationKernelSpec powerlaw(double alpha, double beta = 0.0, double k2 = 0.0);
    static FragmentationKernelSpec half_split();
    static FragmentationKernelSpec custom(std::function<double(double, double, double)> eval,
                                          double k2, double beta, double theta_max = 0.0);

    // k2 for the powerlaw family on [1/n, n]: sup of F * y^beta is reached at
    // y = 1/n, giving (alpha+2) n^{1-beta}. Returns the stored k2 when set.
    double bound_scale_on(double n) const;
};

double evaluate_collision(const CollisionKernelSpec& spec, double x, double y);

// Throws unsupported_operation for delta families; those only exist through
// their discretized fragment weights in the solver.
double evaluate_fragmentation(const FragmentationKernelSpec& spec, double x, double y, double z);

// theta(y, z), the mean number of daughters per breakage event. Closed form
// for the built-in families, adaptive quadrature for custom ones; quadrature
// non-convergence is reported as model_error.
double fragment_count(const FragmentationKernelSpec& spec, double y, double z);

struct Interval {
    double lo;
    double hi;
};

struct HypothesisCheck {
    std::string name;
    bool applicable = true;
    bool pass = true;
    double worst_ratio = 0.0;             // worst observed / allowed
    std::array<double, 3> worst_point{};  // (x, y, z); unused entries zero
    std::string note;
};

struct HypothesisReport {
    std::vector<HypothesisCheck> checks;
    bool all_pass() const;
    const HypothesisCheck* find(const std::string& name) const;
};

// Samples the kernel pair over domain^2 (resp. domain^3) and reports, per
// hypothesis, pass/fail with the worst violation and its location: symmetry
// of C, the collision envelope, the fragmentation envelope, the daughter mass identity and
// the fragment-count bound. Violations are report entries, never exceptions.
HypothesisReport verify_hypotheses(const CollisionKernelSpec& cspec,
                                   const FragmentationKernelSpec& fspec,
                                   Interval domain, int samples, double tol);

// Both routes for the mass identity integral of x F(x,y|z) dx over (0, y):
// exact closed form (built-ins) and generic adaptive quadrature.
double fragment_mass_integral(const FragmentationKernelSpec& spec, double y, double z);
double fragment_mass_integral_quadrature(const FragmentationKernelSpec& spec, double y, double z,
                                         double rel_tol = 1e-9);

}  // namespace fragkin

#endif
