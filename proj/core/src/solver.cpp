#include "fragkin/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "fragkin/errors.hpp"

namespace fragkin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double safe_exp(double x) { return x > 700.0 ? kInf : std::exp(x); }

// One-sided cutoff ramp: 1 inside [1/n, n], linear in log(x) down to 0 over a
// collar of log-width tf.
double taper_ramp(double x, double n, double tf) {
    const double lx = std::log(x);
    const double hi = std::log(n);
    const double lo = -hi;
    if (lx >= lo && lx <= hi) return 1.0;
    const double excess = lx > hi ? lx - hi : lo - lx;
    return excess >= tf ? 0.0 : 1.0 - excess / tf;
}

struct RawWeights {
    std::vector<double> count;  // integral of F over cell_i intersect (0, y]
    double mass = 0.0;          // sum of pivot_i * count_i
    double num = 0.0;           // sum of count_i
};

// Integral of F(., y | z) over each cell, up to the mother pivot. Closed form
// for the powerlaw family, Gauss-Legendre for custom kernels.
RawWeights raw_fragment_counts(const FragmentationKernelSpec& fspec, const GeometricGrid& grid,
                               std::size_t mother, double z) {
    static const double gl_x[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                   -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                   0.7966664774136267,  0.9602898564975363};
    static const double gl_w[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                   0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                   0.2223810344533745, 0.1012285362903763};

    const double y = grid[mother].pivot;
    RawWeights rw;
    rw.count.assign(grid.size(), 0.0);
    for (std::size_t i = 0; i <= mother; ++i) {
        const double lo = grid[i].left;
        const double hi = std::min(grid[i].right, y);
        if (!(hi > lo)) continue;
        double c;
        if (fspec.family == FragmentationFamily::powerlaw) {
            const double a = fspec.alpha;
            c = (a + 2.0) / ((a + 1.0) * std::pow(y, a + 1.0)) *
                (std::pow(hi, a + 1.0) - std::pow(lo, a + 1.0));
        } else {
            const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
            c = 0.0;
            for (int q = 0; q < 8; ++q)
                c += gl_w[q] * fspec.custom_eval(mid + half * gl_x[q], y, z);
            c *= half;
        }
        rw.count[i] = c;
        rw.mass += grid[i].pivot * c;
        rw.num += c;
    }
    return rw;
}

}  // namespace

double TruncatedKernelSet::evaluate(double x, double y) const {
    const double rx = taper_ramp(x, n, taper_fraction);
    if (rx == 0.0) return 0.0;
    const double ry = taper_ramp(y, n, taper_fraction);
    if (ry == 0.0) return 0.0;
    return rx * ry * evaluate_collision(base, x, y);
}

TruncatedKernelSet truncate_kernel(const CollisionKernelSpec& spec, double n, double taper_fraction) {
    if (!(n >= 1.0)) throw std::domain_error("truncation index must be >= 1");
    if (!(taper_fraction > 0.0 && taper_fraction <= 1.0))
        throw std::domain_error("taper_fraction must lie in (0, 1]");
    return TruncatedKernelSet{spec, n, taper_fraction};
}

FragmentWeights discretize_fragments(const FragmentationKernelSpec& fspec, const GeometricGrid& grid,
                                     std::size_t mother, std::size_t z) {
    if (mother >= grid.size() || z >= grid.size())
        throw std::invalid_argument("discretize_fragments: cell index out of range");

    FragmentWeights out;
    out.weights.assign(grid.size(), 0.0);
    const double y = grid[mother].pivot;

    if (fspec.family == FragmentationFamily::half_split_delta) {
        const double half = 0.5 * y;
        if (half < grid.lower()) {
            out.shattering_loss = true;  // both daughters below the floor
            return out;
        }
        if (half < grid[0].pivot) {
            // below the first pivot: only the mass identity is reachable
            out.weights[0] = y / (grid[0].pivot * grid[0].width());
            return out;
        }
        // two-point placement keeping count = 2 and mass = y exact
        const std::size_t j = grid.locate(half);
        const double pj = grid[j].pivot;
        if (pj == half) {
            out.weights[j] = 2.0 / grid[j].width();
            out.count_exact = true;
            return out;
        }
        const std::size_t a = half > pj ? j : j - 1;
        const std::size_t b = a + 1;
        const double pa = grid[a].pivot, pb = grid[b].pivot;
        const double u = 2.0 * (pb - half) / (pb - pa);
        const double v = 2.0 * (half - pa) / (pb - pa);
        out.weights[a] = u / grid[a].width();
        out.weights[b] = v / grid[b].width();
        out.count_exact = true;
        return out;
    }

    const RawWeights rw = raw_fragment_counts(fspec, grid, mother, grid[z].pivot);
    if (rw.mass == 0.0) return out;  // kernel vanishes on the support: no redistribution

    // Mass-exact base distribution: cell-averaged kernel integrals rescaled
    // by one scalar so that sum_i pivot_i W_i width_i = y exactly.
    const double scale = y / rw.mass;
    for (std::size_t i = 0; i <= mother; ++i)
        out.weights[i] = rw.count[i] / grid[i].width() * scale;
    const double c_shape = rw.num * scale;

    double theta = 0.0;
    try {
        theta = fragment_count(fspec, y, grid[z].pivot);
    } catch (const model_error&) {
        return out;  // no finite count to enforce
    }

    // Count correction: blend toward the extremal mass-exact distributions.
    // Placing the whole mass at the floor cell raises the count to y/pivot_0,
    // placing it at the mother cell lowers it to 1; any blend keeps the mass
    // identity exact. The count y/pivot_0 is the geometric ceiling, so mothers
    // whose mean daughter size falls below the first pivot stay short of theta.
    const double rel = 1e-12;
    if (std::abs(c_shape - theta) <= rel * theta) {
        out.count_exact = true;
        return out;
    }
    if (c_shape < theta) {
        const double c_floor = y / grid[0].pivot;
        const double floor_w = y / (grid[0].pivot * grid[0].width());
        if (c_floor >= theta) {
            const double t = (theta - c_shape) / (c_floor - c_shape);
            for (std::size_t i = 0; i <= mother; ++i) out.weights[i] *= 1.0 - t;
            out.weights[0] += t * floor_w;
            out.count_exact = true;
        } else {
            // best reachable count under exact mass and nonnegativity
            std::fill(out.weights.begin(), out.weights.end(), 0.0);
            out.weights[0] = floor_w;
        }
    } else {
        const double t = (c_shape - theta) / (c_shape - 1.0);
        for (std::size_t i = 0; i <= mother; ++i) out.weights[i] *= 1.0 - t;
        out.weights[mother] += t * y / (grid[mother].pivot * grid[mother].width());
        out.count_exact = true;
    }
    return out;
}

DiscreteSystem::DiscreteSystem(std::shared_ptr<const GeometricGrid> grid, TruncatedKernelSet collision,
                               FragmentationKernelSpec fragmentation)
    : grid_(std::move(grid)), collision_(std::move(collision)), fragmentation_(std::move(fragmentation)) {
    if (!grid_) throw std::invalid_argument("DiscreteSystem: null grid");
    size_ = grid_->size();
    const auto& cells = grid_->cells();

    cmat_.resize(size_ * size_);
    for (std::size_t i = 0; i < size_; ++i)
        for (std::size_t j = 0; j < size_; ++j)
            cmat_[i * size_ + j] = collision_.evaluate(cells[i].pivot, cells[j].pivot);

    z_dependent_ = fragmentation_.family == FragmentationFamily::custom;
    lost_.assign(size_, 0);
    if (!z_dependent_) {
        frag_.resize(size_);
        for (std::size_t m = 0; m < size_; ++m) {
            FragmentWeights fw = discretize_fragments(fragmentation_, *grid_, m, m);
            frag_[m] = std::move(fw.weights);
            lost_[m] = fw.shattering_loss ? 1 : 0;
            has_lost_ = has_lost_ || fw.shattering_loss;
        }
    } else {
        frag_.resize(size_ * size_);
        for (std::size_t m = 0; m < size_; ++m)
            for (std::size_t z = 0; z < size_; ++z)
                frag_[m * size_ + z] = discretize_fragments(fragmentation_, *grid_, m, z).weights;
    }
}

double DiscreteSystem::death_rate(std::span<const double> values, std::size_t cell) const {
    const auto& cells = grid_->cells();
    double acc = 0.0;
    const double* row = cmat_.data() + cell * size_;
    for (std::size_t j = 0; j < size_; ++j) acc += row[j] * values[j] * cells[j].width();
    return acc;
}

void DiscreteSystem::death_all(std::span<const double> values, std::span<double> out) const {
    for (std::size_t i = 0; i < size_; ++i) out[i] = death_rate(values, i);
}

void DiscreteSystem::gain_all(std::span<const double> values, std::span<const double> death,
                              std::span<double> out) const {
    const auto& cells = grid_->cells();
    std::fill(out.begin(), out.end(), 0.0);
    if (!z_dependent_) {
        for (std::size_t m = 0; m < size_; ++m) {
            if (lost_[m]) continue;
            const double flux = death[m] * values[m] * cells[m].width();
            if (flux == 0.0) continue;
            const auto& wm = frag_[m];
            for (std::size_t i = 0; i <= m; ++i) out[i] += wm[i] * flux;
        }
    } else {
        for (std::size_t m = 0; m < size_; ++m)
            for (std::size_t z = 0; z < size_; ++z) {
                const double flux =
                    cmat_[m * size_ + z] * values[m] * values[z] * cells[m].width() * cells[z].width();
                if (flux == 0.0) continue;
                const auto& wmz = frag_[m * size_ + z];
                for (std::size_t i = 0; i <= m; ++i) out[i] += wmz[i] * flux;
            }
    }
}

double DiscreteSystem::gain_rate(std::span<const double> values, std::size_t cell) const {
    std::vector<double> death(size_), gain(size_);
    death_all(values, death);
    gain_all(values, death, gain);
    return gain[cell];
}

void DiscreteSystem::rhs(std::span<const double> values, std::span<double> out,
                         double* shatter_mass_rate) const {
    std::vector<double> death(size_);
    death_all(values, death);
    gain_all(values, death, out);
    const auto& cells = grid_->cells();
    double lost = 0.0;
    if (shatter_mass_rate && has_lost_)
        for (std::size_t m = 0; m < size_; ++m)
            if (lost_[m]) lost += cells[m].pivot * death[m] * values[m] * cells[m].width();
    for (std::size_t i = 0; i < size_; ++i) out[i] -= death[i] * values[i];
    if (shatter_mass_rate) *shatter_mass_rate = lost;
}

double DiscreteSystem::shatter_mass_rate(std::span<const double> values) const {
    if (!has_lost_) return 0.0;
    const auto& cells = grid_->cells();
    double lost = 0.0;
    for (std::size_t m = 0; m < size_; ++m)
        if (lost_[m]) lost += cells[m].pivot * death_rate(values, m) * values[m] * cells[m].width();
    return lost;
}

double death_rate(const DensityState& state, const TruncatedKernelSet& kernel, std::size_t cell) {
    if (cell >= state.grid->size()) throw std::invalid_argument("death_rate: cell out of range");
    return death_rate_at(state, kernel, (*state.grid)[cell].pivot);
}

double death_rate_at(const DensityState& state, const TruncatedKernelSet& kernel, double x) {
    if (!(x > 0.0)) throw std::domain_error("death_rate_at: size must be positive");
    const auto& cells = state.grid->cells();
    double acc = 0.0;
    for (std::size_t j = 0; j < cells.size(); ++j)
        acc += kernel.evaluate(x, cells[j].pivot) * state.values[j] * cells[j].width();
    return acc;
}

double gain_rate(const DensityState& state, const TruncatedKernelSet& kernel,
                 const FragmentationKernelSpec& fspec, std::size_t cell) {
    if (cell >= state.grid->size()) throw std::invalid_argument("gain_rate: cell out of range");
    DiscreteSystem sys(state.grid, kernel, fspec);
    return sys.gain_rate(state.values, cell);
}

ContractionEstimate estimate_contraction(const SolverConfig& config, double g0_norm, double g0_mass) {
    if (!std::isfinite(g0_norm) || !std::isfinite(g0_mass))
        throw std::invalid_argument("estimate_contraction needs finite initial norms");
    if (config.fragmentation.family == FragmentationFamily::half_split_delta)
        throw unsupported_operation(
            "delta fragmentation kernels have no finite sup; the analytic slab constants are undefined");

    const GeometricGrid grid = build_grid(config.n, config.cells_per_decade);
    const double n = config.n;
    const double lambda = config.norm.lambda;
    const double r = config.norm.r;

    // sup of C and F over [1/n, n]^2 by sampling edges and pivots
    std::vector<double> pts;
    pts.reserve(2 * grid.size() + 1);
    for (const Cell& c : grid.cells()) {
        pts.push_back(c.left);
        pts.push_back(c.pivot);
    }
    pts.push_back(grid.upper());

    double supC = 0.0;
    for (double x : pts)
        for (double y : pts) supC = std::max(supC, evaluate_collision(config.collision, x, y));

    double supF = 0.0;
    if (config.fragmentation.family == FragmentationFamily::powerlaw) {
        // (alpha+2) x^alpha / y^(alpha+1) is extremal at the lower-left corner
        supF = (config.fragmentation.alpha + 2.0) * n;
    } else {
        for (double x : pts)
            for (double y : pts) {
                if (x > y) continue;
                for (std::size_t zi = 0; zi < pts.size(); zi += 9)
                    supF = std::max(supF, evaluate_fragmentation(config.fragmentation, x, y, pts[zi]));
            }
    }

    ContractionEstimate est;
    est.M = std::max(supC, supF);

    const double Lambda = safe_exp(lambda * (1.0 + n)) / lambda +
                          safe_exp(2.0 * lambda) * std::pow(n, 1.0 - r) / (1.0 - r);
    est.L = g0_norm + Lambda * est.M * est.M * config.horizon * g0_mass * g0_mass;

    const double K1 = config.collision.k1 * config.fragmentation.bound_scale_on(n);
    const double B = 2.0 * est.L;
    const double M = est.M, L = est.L;

    auto lhs_invariance = [&](double t) {
        return safe_exp(2.0 * t * M * L) * (1.0 + 4.0 * L * K1 * t * Lambda);
    };
    auto lhs_contraction = [&](double t) {
        return safe_exp(t * B * M) * (M * t * g0_norm + K1 * Lambda * (M * t * t * B * B + 2.0 * B * t));
    };
    auto largest_below = [](const auto& lhs, double target) {
        double lo = 0.0, hi = 1.0;
        while (lhs(hi) < target) {
            lo = hi;
            hi *= 2.0;
            if (hi > 1e30) return kInf;
        }
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (lhs(mid) < target)
                lo = mid;
            else
                hi = mid;
        }
        return lo;
    };

    est.t_prime = largest_below(lhs_invariance, 2.0);
    est.t_double_prime = largest_below(lhs_contraction, 1.0);
    est.t0 = std::min({est.t_prime, est.t_double_prime, config.horizon});
    est.k = lhs_contraction(est.t0);
    if (!(est.k < 1.0))
        throw std::logic_error(
            "contraction factor k >= 1 at the certified slab length; the bound evaluation is inconsistent");
    return est;
}

std::vector<double> apply_slab_operator(std::span<const double> start,
                                        std::span<const double> iterate_nodes,
                                        const DiscreteSystem& system, const SolverConfig& config,
                                        double length) {
    const std::size_t N = start.size();
    const int K = std::max(1, config.substeps);
    const std::size_t nodes = static_cast<std::size_t>(K) + 1;
    if (iterate_nodes.size() != nodes * N)
        throw std::invalid_argument("apply_slab_operator: iterate has wrong node layout");
    if (!(length > 0.0)) throw std::domain_error("apply_slab_operator needs a positive slab length");
    const double h = length / K;

    std::vector<double> death(nodes * N), D(nodes * N), gain(nodes * N), out(nodes * N);
    for (std::size_t j = 0; j < nodes; ++j) {
        system.death_all(iterate_nodes.subspan(j * N, N), {&death[j * N], N});
        system.gain_all(iterate_nodes.subspan(j * N, N), {&death[j * N], N}, {&gain[j * N], N});
    }
    // cumulative collision exposure D(s_j, x) by the same trapezoid rule
    std::fill(D.begin(), D.begin() + static_cast<long>(N), 0.0);
    for (std::size_t j = 1; j < nodes; ++j)
        for (std::size_t i = 0; i < N; ++i)
            D[j * N + i] = D[(j - 1) * N + i] + 0.5 * h * (death[(j - 1) * N + i] + death[j * N + i]);

    // survival factor on the slab start data plus the exposure-weighted time
    // integral of the gain; every term is nonnegative
    for (std::size_t j = 0; j < nodes; ++j) {
        double* oj = &out[j * N];
        for (std::size_t i = 0; i < N; ++i) {
            const double Dj = D[j * N + i];
            double acc = start[i] * std::exp(-Dj);
            if (j > 0) {
                double integral = 0.5 * std::exp(D[i] - Dj) * gain[i];
                for (std::size_t l = 1; l < j; ++l)
                    integral += std::exp(D[l * N + i] - Dj) * gain[l * N + i];
                integral += 0.5 * gain[j * N + i];
                acc += h * integral;
            }
            oj[i] = acc;
        }
    }
    return out;
}

namespace {

struct SlabResult {
    std::vector<double> end_values;
    int iterations = 0;
    double max_ratio = 0.0;
    double final_diff = 0.0;
    double first_diff = 0.0;
    double max_norm = 0.0;
    double shatter_loss = 0.0;
};

// Fixed-point slab on [t, t + len]: iterates g_a = C(g_{a-1}) stored on the
// trapezoid nodes, converged in the weighted norm (sup over nodes).
SlabResult run_slab(const std::vector<double>& start, const DiscreteSystem& sys,
                    const SolverConfig& cfg, double len) {
    const std::size_t N = start.size();
    const int K = std::max(1, cfg.substeps);
    const double h = len / K;
    const auto& cells = sys.grid().cells();

    std::vector<double> nw(N);  // weighted-norm weights at pivots, times width
    {
        const double e2l = std::exp(2.0 * cfg.norm.lambda);
        for (std::size_t i = 0; i < N; ++i)
            nw[i] = (std::exp(cfg.norm.lambda * (1.0 + cells[i].pivot)) +
                     e2l * std::pow(cells[i].pivot, -cfg.norm.r)) *
                    cells[i].width();
    }

    const std::size_t nodes = static_cast<std::size_t>(K) + 1;
    std::vector<double> G(nodes * N);
    for (std::size_t j = 0; j < nodes; ++j)
        std::copy(start.begin(), start.end(), G.begin() + static_cast<long>(j * N));

    SlabResult res;
    double prev_diff = -1.0;
    for (int it = 0; it < cfg.picard_max_iter; ++it) {
        std::vector<double> Gn = apply_slab_operator(start, G, sys, cfg, len);

        double diff = 0.0, norm_max = 0.0;
        for (std::size_t j = 0; j < nodes; ++j) {
            double d = 0.0, nn = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                d += nw[i] * std::abs(Gn[j * N + i] - G[j * N + i]);
                nn += nw[i] * std::abs(Gn[j * N + i]);
            }
            diff = std::max(diff, d);
            norm_max = std::max(norm_max, nn);
        }
        res.max_norm = std::max(res.max_norm, norm_max);
        if (it == 0) res.first_diff = diff;
        if (prev_diff > 0.0) res.max_ratio = std::max(res.max_ratio, diff / prev_diff);
        prev_diff = diff;
        G.swap(Gn);
        res.iterations = it + 1;
        res.final_diff = diff;
        if (diff <= cfg.picard_tol) {
            res.end_values.assign(G.begin() + static_cast<long>(K * N),
                                  G.begin() + static_cast<long>((K + 1) * N));
            if (sys.has_shatter_channel()) {
                double lost = 0.0;
                for (std::size_t j = 0; j < nodes; ++j) {
                    const double rate = sys.shatter_mass_rate({&G[j * N], N});
                    lost += (j == 0 || j + 1 == nodes) ? 0.5 * rate : rate;
                }
                res.shatter_loss = lost * h;
            }
            return res;
        }
    }
    throw convergence_error("fixed-point iteration did not reach tolerance " +
                                std::to_string(cfg.picard_tol) + " within " +
                                std::to_string(cfg.picard_max_iter) + " iterations",
                            res.final_diff, res.first_diff);
}

std::vector<double> normalized_outputs(const SolverConfig& cfg) {
    std::vector<double> out = cfg.output_times;
    if (out.empty()) {
        out.push_back(0.0);
        if (cfg.horizon > 0.0) out.push_back(cfg.horizon);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    for (double t : out)
        if (t < 0.0 || t > cfg.horizon)
            throw std::invalid_argument("output time " + std::to_string(t) + " outside [0, horizon]");
    return out;
}

}  // namespace

DensityState picard_slab_step(const DensityState& state, const SolverConfig& config,
                              const DiscreteSystem& system, const ContractionEstimate& estimate) {
    if (!(estimate.t0 > 0.0)) throw std::invalid_argument("picard_slab_step needs a positive slab length");
    SlabResult r = run_slab(state.values, system, config, estimate.t0);
    DensityState out;
    out.grid = state.grid;
    out.values = std::move(r.end_values);
    out.time = state.time + estimate.t0;
    return out;
}

DensityState rk4_step(const DensityState& state, const DiscreteSystem& system, double dt,
                      EventLog* log) {
    if (!(dt > 0.0)) throw std::domain_error("rk4_step needs dt > 0");
    const std::size_t N = state.values.size();
    const auto& cells = system.grid().cells();
    std::vector<double> k1(N), k2(N), k3(N), k4(N), tmp(N);
    double lost1 = 0, lost2 = 0, lost3 = 0, lost4 = 0;

    system.rhs(state.values, k1, &lost1);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = state.values[i] + 0.5 * dt * k1[i];
    system.rhs(tmp, k2, &lost2);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = state.values[i] + 0.5 * dt * k2[i];
    system.rhs(tmp, k3, &lost3);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = state.values[i] + dt * k3[i];
    system.rhs(tmp, k4, &lost4);

    DensityState out;
    out.grid = state.grid;
    out.time = state.time + dt;
    out.values.resize(N);
    double clamped = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        double v = state.values[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        if (v < 0.0) {
            clamped += -v * cells[i].pivot * cells[i].width();
            v = 0.0;
        }
        out.values[i] = v;
    }
    if (log) {
        if (clamped > 0.0) log->clamps.push_back({out.time, clamped});
        const double lost = dt / 6.0 * (lost1 + 2.0 * lost2 + 2.0 * lost3 + lost4);
        if (lost > 0.0) {
            log->shattering.push_back({out.time, lost});
            log->total_shatter_loss += lost;
        }
    }
    return out;
}

Trajectory solve(const SolverConfig& config) {
    if (!config.initial_data) throw std::invalid_argument("solve: config has no initial data");
    auto grid = std::make_shared<const GeometricGrid>(build_grid(config.n, config.cells_per_decade));
    return solve(config, init_from_function(grid, config.initial_data));
}

Trajectory solve(const SolverConfig& config, const DensityState& initial) {
    if (!(config.horizon >= 0.0)) throw std::invalid_argument("horizon must be nonnegative");
    if (!(config.picard_tol > 0.0)) throw std::invalid_argument("picard_tol must be positive");

    Trajectory traj;
    traj.grid = initial.grid;
    traj.config = config;
    DiscreteSystem sys(initial.grid, truncate_kernel(config.collision, config.n, config.taper_fraction),
                       config.fragmentation);

    const std::vector<double> outputs = normalized_outputs(config);
    DensityState g = initial;
    g.time = 0.0;
    std::size_t out_idx = 0;
    if (out_idx < outputs.size() && outputs[out_idx] == 0.0) {
        traj.snapshots.push_back(g);
        ++out_idx;
    }
    if (config.horizon == 0.0) return traj;

    const double cap = config.substep_cap() * config.substeps;
    double trial = std::min(config.horizon / 64.0, cap);
    double t = 0.0;
    long nslabs = 0;

    while (t < config.horizon) {
        const double next_out = out_idx < outputs.size() ? outputs[out_idx] : config.horizon;
        const double remaining = config.horizon - t;

        // continuation: the slab constants are re-derived from the state
        // reached so far, over the remaining horizon
        ContractionEstimate est;
        bool have_est = true;
        try {
            SolverConfig ecfg = config;
            ecfg.horizon = remaining;
            est = estimate_contraction(ecfg, weighted_norm(g, config.norm), moment(g, 1.0));
        } catch (const unsupported_operation&) {
            if (config.slab_policy == SlabPolicy::analytic_t0) throw;
            have_est = false;
        }

        double len;
        if (config.slab_policy == SlabPolicy::analytic_t0)
            len = std::min(est.t0, next_out - t);
        else
            len = std::min({trial, next_out - t, cap, remaining});

        SlabResult r;
        for (;;) {
            try {
                r = run_slab(g.values, sys, config, len);
                break;
            } catch (const convergence_error&) {
                if (config.slab_policy == SlabPolicy::analytic_t0) throw;
                len *= 0.5;
                if (len < 1e-12 * config.horizon) throw;
            }
        }

        SlabRecord rec;
        rec.t_start = t;
        rec.length = len;
        rec.iterations = r.iterations;
        rec.k = have_est ? est.k : std::numeric_limits<double>::quiet_NaN();
        rec.L = have_est ? est.L : std::numeric_limits<double>::quiet_NaN();
        rec.max_ratio = r.max_ratio;
        rec.max_norm = r.max_norm;
        rec.shatter_loss = r.shatter_loss;
        traj.events.slabs.push_back(rec);
        if (r.shatter_loss > 0.0) {
            traj.events.shattering.push_back({t + len, r.shatter_loss});
            traj.events.total_shatter_loss += r.shatter_loss;
        }

        t = (len == next_out - t) ? next_out : t + len;
        g.values = std::move(r.end_values);
        g.time = t;
        if (out_idx < outputs.size() && t == outputs[out_idx]) {
            traj.snapshots.push_back(g);
            ++out_idx;
        }

        if (config.slab_policy == SlabPolicy::adaptive) {
            if (r.max_ratio < 0.5)
                trial = std::min(2.0 * len, cap);
            else
                trial = std::max(0.5 * len, 1e-12 * config.horizon);
        }

        ++nslabs;
        if (config.max_slabs > 0 && nslabs >= config.max_slabs && t < config.horizon) {
            traj.events.slab_budget_exhausted = true;
            break;
        }
    }
    return traj;
}

Trajectory solve_rk4(const SolverConfig& config, const DensityState& initial) {
    Trajectory traj;
    traj.grid = initial.grid;
    traj.config = config;
    DiscreteSystem sys(initial.grid, truncate_kernel(config.collision, config.n, config.taper_fraction),
                       config.fragmentation);

    const std::vector<double> outputs = normalized_outputs(config);
    const double dt_target = config.rk4_dt > 0.0 ? config.rk4_dt : config.horizon / 4096.0;

    DensityState g = initial;
    g.time = 0.0;
    double t = 0.0;
    for (double tout : outputs) {
        if (tout > t) {
            const int steps = std::max(1, static_cast<int>(std::ceil((tout - t) / dt_target)));
            const double dt = (tout - t) / steps;
            for (int s = 0; s < steps; ++s) g = rk4_step(g, sys, dt, &traj.events);
            g.time = tout;
            t = tout;
        }
        traj.snapshots.push_back(g);
    }
    return traj;
}

}  // namespace fragkin
