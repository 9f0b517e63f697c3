#include "fragkin/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <utility>

#include "fragkin/errors.hpp"

namespace fragkin {

namespace {

void require_positive(double v, const char* what) {
    if (!(v > 0.0)) throw std::domain_error(std::string(what) + " must be positive");
}

// Adaptive Simpson with an explicit recursion budget. The integrands here
// (x F and F for alpha > -1 power laws) are continuous on [0, y] but may have
// steep endpoint behaviour, so the budget is generous.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double fa, double fm, double fb, double whole, double tol, int depth,
                        bool& converged) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (!std::isfinite(left) || !std::isfinite(right)) {
        converged = false;
        return whole;
    }
    if (depth <= 0) {
        if (std::abs(left + right - whole) > tol) converged = false;
        return left + right;
    }
    if (std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, converged) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, converged);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol,
                 bool& converged) {
    converged = true;
    if (!(b > a)) return 0.0;
    const double fa = f(a);
    const double fm = f(0.5 * (a + b));
    const double fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48, converged);
}

}  // namespace

CollisionKernelSpec CollisionKernelSpec::constant(double k1) {
    require_positive(k1, "k1");
    CollisionKernelSpec s;
    s.family = CollisionFamily::constant;
    s.k1 = k1;
    s.rate_scale = k1;
    return s;
}

CollisionKernelSpec CollisionKernelSpec::singular_product(double k1, double sigma, double nu) {
    require_positive(k1, "k1");
    if (!(sigma >= 0.0 && sigma <= 0.5)) throw std::domain_error("sigma must lie in [0, 1/2]");
    if (!(nu >= 0.0 && nu <= 1.0)) throw std::domain_error("nu must lie in [0, 1]");
    CollisionKernelSpec s;
    s.family = CollisionFamily::singular_product;
    s.k1 = k1;
    s.sigma = sigma;
    s.nu = nu;
    s.rate_scale = k1;
    return s;
}

CollisionKernelSpec CollisionKernelSpec::brownian(double scale) {
    require_positive(scale, "scale");
    CollisionKernelSpec s;
    s.family = CollisionFamily::smoluchowski_brownian;
    s.rate_scale = scale;
    s.k1 = 4.0 * scale;
    s.sigma = 1.0 / 3.0;
    s.nu = 2.0 / 3.0;
    return s;
}

CollisionKernelSpec CollisionKernelSpec::cheng_redner(int model, double xi, double scale, double domain_n) {
    require_positive(scale, "scale");
    CollisionKernelSpec s;
    s.rate_scale = scale;
    s.xi = xi;
    s.k1 = scale;
    switch (model) {
        case 1:
            if (!(xi >= -1.0 && xi <= 2.0))
                throw std::domain_error("cr-model-1 needs xi in [-1, 2] so that sigma <= 1/2 and nu <= 1");
            s.family = CollisionFamily::cheng_redner_i;
            s.sigma = std::max(0.0, -xi / 2.0);
            s.nu = std::max(0.0, xi / 2.0);
            break;
        case 2:
            if (!(xi >= -1.0 && xi <= 1.0))
                throw std::domain_error("cr-model-2 needs xi in [-1, 1]");
            s.family = CollisionFamily::cheng_redner_ii;
            s.sigma = std::max(0.0, -xi / 2.0);
            s.nu = std::max(0.0, xi);
            break;
        case 3:
            if (!(xi >= -1.0 && xi <= 1.0))
                throw std::domain_error("cr-model-3 needs xi in [-1, 1]");
            s.family = CollisionFamily::cheng_redner_iii;
            if (xi < 0.0) {
                // min(x,y)^xi exceeds any global (xy)^{-sigma} envelope along
                // one axis; the envelope constant is sized for [1/n, n] only.
                if (!(domain_n > 1.0))
                    throw std::domain_error("cr-model-3 with xi < 0 needs a truncation domain to size k1");
                s.sigma = -xi / 2.0;
                s.k1 = scale * std::pow(domain_n, -xi);
                s.bound_note = "k1 valid on [1/" + std::to_string(domain_n) + ", " +
                               std::to_string(domain_n) + "] only";
            } else {
                s.nu = xi;
            }
            break;
        default:
            throw std::domain_error("Cheng-Redner model must be 1, 2 or 3");
    }
    return s;
}

CollisionKernelSpec CollisionKernelSpec::custom(std::function<double(double, double)> eval,
                                                double k1, double sigma, double nu) {
    CollisionKernelSpec s;
    s.family = CollisionFamily::custom;
    s.custom_eval = std::move(eval);
    s.k1 = k1;
    s.sigma = sigma;
    s.nu = nu;
    return s;
}

double evaluate_collision(const CollisionKernelSpec& spec, double x, double y) {
    if (!(x > 0.0) || !(y > 0.0)) throw std::domain_error("collision kernel sizes must be positive");
    // built-in rates are evaluated with sorted arguments so that symmetry is
    // exact to the last bit; custom kernels are the user's responsibility
    if (spec.family != CollisionFamily::custom && y < x) std::swap(x, y);
    switch (spec.family) {
        case CollisionFamily::constant:
            return spec.rate_scale;
        case CollisionFamily::singular_product:
            return spec.k1 * std::pow(1.0 + x, spec.nu) * std::pow(1.0 + y, spec.nu) *
                   std::pow(x * y, -spec.sigma);
        case CollisionFamily::smoluchowski_brownian: {
            const double cx = std::cbrt(x), cy = std::cbrt(y);
            return spec.rate_scale * (cx + cy) * (1.0 / cx + 1.0 / cy);
        }
        case CollisionFamily::cheng_redner_i:
            return spec.rate_scale * std::pow(x * y, spec.xi / 2.0);
        case CollisionFamily::cheng_redner_ii:
            // ties go to the "otherwise" branch
            return spec.rate_scale * (y < x ? std::pow(x, spec.xi) : std::pow(y, spec.xi));
        case CollisionFamily::cheng_redner_iii:
            return spec.rate_scale * (x < y ? std::pow(x, spec.xi) : std::pow(y, spec.xi));
        case CollisionFamily::custom: {
            const double v = spec.custom_eval(x, y);
            if (!std::isfinite(v) || v < 0.0)
                throw model_error("custom collision kernel returned a negative or non-finite rate");
            return v;
        }
    }
    throw std::logic_error("unreachable collision family");
}

FragmentationKernelSpec FragmentationKernelSpec::powerlaw(double alpha, double beta, double k2) {
    if (!(alpha > -1.0)) throw std::domain_error("powerlaw alpha must exceed -1");
    if (beta < 0.0) throw std::domain_error("beta must be nonnegative");
    FragmentationKernelSpec s;
    s.family = FragmentationFamily::powerlaw;
    s.alpha = alpha;
    s.beta = beta;
    s.k2 = k2;
    s.theta_max = (alpha + 2.0) / (alpha + 1.0);
    s.validity_note = "F <= k2/y^beta holds on truncated domains [1/n, n] with k2 = (alpha+2) n^(1-beta)";
    return s;
}

FragmentationKernelSpec FragmentationKernelSpec::half_split() {
    FragmentationKernelSpec s;
    s.family = FragmentationFamily::half_split_delta;
    s.theta_max = 2.0;
    s.validity_note = "delta distribution; pointwise envelope not applicable";
    return s;
}

FragmentationKernelSpec FragmentationKernelSpec::custom(
    std::function<double(double, double, double)> eval, double k2, double beta, double theta_max) {
    FragmentationKernelSpec s;
    s.family = FragmentationFamily::custom;
    s.custom_eval = std::move(eval);
    s.k2 = k2;
    s.beta = beta;
    s.theta_max = theta_max;
    return s;
}

double FragmentationKernelSpec::bound_scale_on(double n) const {
    if (k2 > 0.0) return k2;
    if (family == FragmentationFamily::powerlaw && n > 1.0)
        return (alpha + 2.0) * std::pow(n, 1.0 - beta);
    return k2;
}

double evaluate_fragmentation(const FragmentationKernelSpec& spec, double x, double y, double z) {
    if (!(x > 0.0) || !(y > 0.0) || !(z > 0.0))
        throw std::domain_error("fragmentation kernel sizes must be positive");
    switch (spec.family) {
        case FragmentationFamily::powerlaw:
            if (x > y) return 0.0;
            return (spec.alpha + 2.0) * std::pow(x, spec.alpha) / std::pow(y, spec.alpha + 1.0);
        case FragmentationFamily::half_split_delta:
            throw unsupported_operation(
                "delta fragmentation kernels have no pointwise values; use the discretized fragment weights");
        case FragmentationFamily::custom: {
            if (x > y) return 0.0;
            const double v = spec.custom_eval(x, y, z);
            if (!std::isfinite(v) || v < 0.0)
                throw model_error("custom fragmentation kernel returned a negative or non-finite density");
            return v;
        }
    }
    throw std::logic_error("unreachable fragmentation family");
}

double fragment_count(const FragmentationKernelSpec& spec, double y, double z) {
    if (!(y > 0.0) || !(z > 0.0)) throw std::domain_error("fragment_count sizes must be positive");
    switch (spec.family) {
        case FragmentationFamily::powerlaw:
            return (spec.alpha + 2.0) / (spec.alpha + 1.0);
        case FragmentationFamily::half_split_delta:
            return 2.0;
        case FragmentationFamily::custom: {
            bool ok = true;
            const double v = integrate([&](double x) { return x == 0.0 ? 0.0 : spec.custom_eval(x, y, z); },
                                       0.0, y, 1e-9 * std::max(1.0, y), ok);
            if (!ok || !std::isfinite(v))
                throw model_error("fragment count quadrature did not converge; kernel may be divergent");
            return v;
        }
    }
    throw std::logic_error("unreachable fragmentation family");
}

double fragment_mass_integral(const FragmentationKernelSpec& spec, double y, double z) {
    if (!(y > 0.0) || !(z > 0.0)) throw std::domain_error("sizes must be positive");
    switch (spec.family) {
        case FragmentationFamily::powerlaw:
        case FragmentationFamily::half_split_delta:
            return y;  // exact by construction for both families
        case FragmentationFamily::custom:
            return fragment_mass_integral_quadrature(spec, y, z);
    }
    throw std::logic_error("unreachable fragmentation family");
}

double fragment_mass_integral_quadrature(const FragmentationKernelSpec& spec, double y, double z,
                                         double rel_tol) {
    if (spec.family == FragmentationFamily::half_split_delta) return y;
    bool ok = true;
    std::function<double(double)> f;
    if (spec.family == FragmentationFamily::powerlaw) {
        const double a = spec.alpha;
        f = [a, y](double x) { return x == 0.0 ? 0.0 : x * (a + 2.0) * std::pow(x, a) / std::pow(y, a + 1.0); };
    } else {
        f = [&spec, y, z](double x) { return x == 0.0 ? 0.0 : x * spec.custom_eval(x, y, z); };
    }
    const double v = integrate(f, 0.0, y, rel_tol * y, ok);
    if (!ok || !std::isfinite(v))
        throw model_error("fragment mass quadrature did not converge");
    return v;
}

bool HypothesisReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const HypothesisCheck& c) { return !c.applicable || c.pass; });
}

const HypothesisCheck* HypothesisReport::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

HypothesisReport verify_hypotheses(const CollisionKernelSpec& cspec,
                                   const FragmentationKernelSpec& fspec,
                                   Interval domain, int samples, double tol) {
    if (!(domain.lo > 0.0) || !(domain.hi > domain.lo))
        throw std::domain_error("verify_hypotheses needs a domain inside (0, inf)");
    if (samples < 1) throw std::domain_error("need at least one sample");

    std::mt19937 rng(0x5eedu);  // fixed seed keeps reports reproducible
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double llo = std::log(domain.lo), lhi = std::log(domain.hi);
    auto draw = [&]() { return std::exp(llo + (lhi - llo) * unif(rng)); };

    std::vector<double> pts;
    pts.reserve(static_cast<std::size_t>(samples) + 2);
    pts.push_back(domain.lo);
    pts.push_back(domain.hi);
    for (int i = 0; i < samples; ++i) pts.push_back(draw());

    HypothesisReport report;

    {
        HypothesisCheck c;
        c.name = "symmetry";
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const double x = pts[i];
            const double y = pts[(i * 7 + 3) % pts.size()];
            const double d = std::abs(evaluate_collision(cspec, x, y) - evaluate_collision(cspec, y, x));
            if (d > c.worst_ratio) {
                c.worst_ratio = d;
                c.worst_point = {x, y, 0.0};
            }
        }
        c.pass = c.worst_ratio == 0.0;
        report.checks.push_back(c);
    }

    {
        HypothesisCheck c;
        c.name = "collision-envelope";
        c.note = cspec.bound_note;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const double x = pts[i];
            const double y = pts[(i * 5 + 1) % pts.size()];
            const double bound = cspec.k1 * std::pow(1.0 + x, cspec.nu) * std::pow(1.0 + y, cspec.nu) *
                                 std::pow(x * y, -cspec.sigma);
            const double ratio = evaluate_collision(cspec, x, y) / bound;
            if (ratio > c.worst_ratio) {
                c.worst_ratio = ratio;
                c.worst_point = {x, y, 0.0};
            }
        }
        c.pass = c.worst_ratio <= 1.0 + tol;
        report.checks.push_back(c);
    }

    const bool is_delta = fspec.family == FragmentationFamily::half_split_delta;

    {
        HypothesisCheck c;
        c.name = "fragmentation-envelope";
        if (is_delta) {
            c.applicable = false;
            c.note = fspec.validity_note;
        } else {
            const double k2 = fspec.bound_scale_on(domain.hi);
            if (!(k2 > 0.0)) {
                c.applicable = false;
                c.note = "no envelope scale k2 configured";
            } else {
                for (std::size_t i = 0; i < pts.size(); ++i) {
                    const double y = pts[i];
                    const double z = pts[(i * 3 + 2) % pts.size()];
                    const double x = domain.lo + (y - domain.lo) * unif(rng);
                    if (!(x > 0.0) || x > y) continue;
                    const double ratio =
                        evaluate_fragmentation(fspec, x, y, z) * std::pow(y, fspec.beta) / k2;
                    if (ratio > c.worst_ratio) {
                        c.worst_ratio = ratio;
                        c.worst_point = {x, y, z};
                    }
                }
                c.note = fspec.validity_note;
            }
        }
        c.pass = !c.applicable || c.worst_ratio <= 1.0 + tol;
        report.checks.push_back(c);
    }

    {
        HypothesisCheck c;
        c.name = "daughter-mass-identity";
        if (is_delta) {
            c.note = "delta family: identity exact by construction";
        } else {
            for (std::size_t i = 0; i < pts.size(); ++i) {
                const double y = pts[i];
                const double z = pts[(i + 5) % pts.size()];
                double rel;
                try {
                    rel = std::abs(fragment_mass_integral_quadrature(fspec, y, z) / y - 1.0);
                } catch (const model_error&) {
                    rel = std::numeric_limits<double>::infinity();
                }
                if (rel > c.worst_ratio) {
                    c.worst_ratio = rel;
                    c.worst_point = {0.0, y, z};
                }
            }
            c.pass = c.worst_ratio <= std::max(tol, 1e-6);
        }
        report.checks.push_back(c);
    }

    {
        HypothesisCheck c;
        c.name = "fragment-count-bound";
        const double cap = fspec.theta_max;
        if (!(cap > 0.0)) {
            c.applicable = false;
            c.note = "no uniform fragment-count bound configured";
        } else {
            for (std::size_t i = 0; i < pts.size(); ++i) {
                const double y = pts[i];
                const double z = pts[(i + 11) % pts.size()];
                double theta;
                try {
                    theta = fragment_count(fspec, y, z);
                } catch (const model_error&) {
                    theta = std::numeric_limits<double>::infinity();
                }
                const double ratio = theta / cap;
                if (ratio > c.worst_ratio) {
                    c.worst_ratio = ratio;
                    c.worst_point = {0.0, y, z};
                }
            }
            c.pass = std::isfinite(c.worst_ratio) && c.worst_ratio <= 1.0 + tol;
        }
        report.checks.push_back(c);
    }

    return report;
}

}  // namespace fragkin
