#include "fragkin/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <stdexcept>

namespace fragkin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Quadratic-growth envelope shared by the negative-order and N0 bounds:
// u' <= c u^2 with u = weight * B + S gives u(t) = u0 / (1 - c u0 t).
std::optional<double> quadratic_envelope(double B0, double S, double c, double weight, double t) {
    if (t < 0.0) throw std::domain_error("envelope time must be nonnegative");
    const double u0 = weight * B0 + S;
    if (c == 0.0 || u0 <= 0.0) return B0;
    const double t_blow = 1.0 / (weight * c * u0);
    if (t >= t_blow) return std::nullopt;
    return (u0 / (1.0 - weight * c * u0 * t) - S) / weight;
}

BoundReport make_report(std::string name, std::vector<double> times, std::vector<double> observed,
                        std::vector<double> bound, double tol) {
    BoundReport r;
    r.quantity = std::move(name);
    r.times = std::move(times);
    r.observed = std::move(observed);
    r.bound = std::move(bound);
    r.worst_margin = -kInf;
    for (std::size_t i = 0; i < r.observed.size(); ++i) {
        if (std::isinf(r.bound[i])) continue;
        const double denom = r.bound[i] != 0.0 ? std::abs(r.bound[i]) : 1.0;
        r.worst_margin = std::max(r.worst_margin, (r.observed[i] - r.bound[i]) / denom);
    }
    if (r.worst_margin == -kInf) r.worst_margin = 0.0;  // every bound infinite
    r.pass = r.worst_margin <= tol;
    return r;
}

}  // namespace

double mass_drift(const Trajectory& traj) {
    if (traj.snapshots.empty()) throw std::invalid_argument("mass_drift needs at least one snapshot");
    const double m0 = moment(traj.snapshots.front(), 1.0);
    if (m0 == 0.0) return 0.0;
    double worst = 0.0;
    for (const auto& s : traj.snapshots) worst = std::max(worst, std::abs(moment(s, 1.0) - m0) / m0);
    return worst;
}

std::optional<double> riccati_envelope(double B0, double N1bar, double N2bar, double k1, double k2,
                                       double r, double t) {
    if (!(r > 0.0 && r < 1.0)) throw std::domain_error("riccati_envelope needs r in (0, 1)");
    if (!(B0 >= 0.0)) throw std::domain_error("riccati_envelope needs B0 >= 0");
    const double c = k1 * k2 / (1.0 - r);
    return quadratic_envelope(B0, N1bar + N2bar, c, 2.0, t);
}

double gronwall_envelope(double C0, double C2, double C3, double t) {
    if (!(C2 > 0.0)) throw std::domain_error("gronwall_envelope needs C2 > 0");
    const double e = std::exp(C2 * t);
    return C3 / C2 * (e - 1.0) + C0 * e;
}

std::vector<BoundReport> moment_bounds_check(const Trajectory& traj, double r, double tol) {
    if (traj.snapshots.empty()) throw std::invalid_argument("moment_bounds_check needs snapshots");
    const auto& cfg = traj.config;
    std::vector<double> times;
    times.reserve(traj.snapshots.size());
    for (const auto& s : traj.snapshots) times.push_back(s.time);

    std::vector<BoundReport> out;

    {
        std::vector<double> obs, bnd;
        const double m0 = moment(traj.snapshots.front(), 1.0);
        const bool lossy = !traj.events.shattering.empty();
        for (const auto& s : traj.snapshots) {
            // recorded shattering losses are part of the mass ledger
            double lost = 0.0;
            for (const auto& sh : traj.events.shattering)
                if (sh.time <= s.time) lost += sh.lost_mass;
            obs.push_back(std::abs(moment(s, 1.0) - (m0 - lost)));
            bnd.push_back(std::max(m0, 1.0) * tol);
        }
        // conservation is asserted directly: |N1(t) - N1(0)| <= tol * N1(0)
        BoundReport rep = make_report("N1-conservation", times, obs, bnd, 0.0);
        rep.note = lossy ? "first moment constant up to the recorded shattering losses"
                         : "first moment constant along the run";
        out.push_back(std::move(rep));
    }

    {
        std::vector<double> obs, bnd;
        double prev = kInf;
        const double n2_0 = moment(traj.snapshots.front(), 2.0);
        bool monotone = true;
        for (const auto& s : traj.snapshots) {
            const double n2 = moment(s, 2.0);
            if (n2 > prev * (1.0 + tol)) monotone = false;
            prev = n2;
            obs.push_back(n2);
            bnd.push_back(n2_0);
        }
        BoundReport rep = make_report("N2-monotone-bound", times, obs, bnd, tol);
        rep.pass = rep.pass && monotone;
        rep.note = "second moment non-increasing and below its initial value";
        out.push_back(std::move(rep));
    }

    {
        BoundReport rep;
        rep.quantity = "N-negative-r-riccati";
        const double k2 = cfg.fragmentation.bound_scale_on(cfg.n);
        if (!(k2 > 0.0)) {
            // delta daughters have no pointwise envelope, so the Riccati
            // constants are undefined
            rep.skipped = true;
            rep.note = "no fragmentation envelope scale configured";
        } else {
            const double B0 = moment(traj.snapshots.front(), -r);
            const double n1 = moment(traj.snapshots.front(), 1.0);
            const double n2 = moment(traj.snapshots.front(), 2.0);
            std::vector<double> obs, bnd;
            for (const auto& s : traj.snapshots) {
                obs.push_back(moment(s, -r));
                const auto env = riccati_envelope(B0, n1, n2, cfg.collision.k1, k2, r, s.time);
                bnd.push_back(env ? *env : kInf);
            }
            rep = make_report("N-negative-r-riccati", times, obs, bnd, tol);
            rep.note = "negative-order moment below its quadratic-growth envelope";
        }
        out.push_back(std::move(rep));
    }

    {
        BoundReport rep;
        rep.quantity = "N0-growth-bound";
        const double theta_cap = cfg.fragmentation.theta_max;
        if (!(theta_cap > 0.0)) {
            rep.skipped = true;
            rep.note = "no uniform fragment-count bound; N0 envelope not checkable";
        } else {
            // constants of the N0 inequality: the uniform bound on the
            // -sigma moment is instantiated by its observed supremum
            double nsig_bar = 0.0;
            std::vector<double> n0s;
            for (const auto& s : traj.snapshots) {
                n0s.push_back(moment(s, 0.0));
                nsig_bar = std::max(nsig_bar, cfg.collision.sigma > 0.0
                                                  ? moment(s, -cfg.collision.sigma)
                                                  : n0s.back());
            }
            const double S0 = std::pow(2.0, cfg.collision.nu) * nsig_bar +
                              moment(traj.snapshots.front(), 1.0);
            const double c0 = cfg.collision.k1 * (theta_cap - 1.0);
            std::vector<double> obs, bnd;
            for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
                obs.push_back(n0s[i]);
                const auto env = quadratic_envelope(n0s[0], S0, c0, 1.0, times[i]);
                bnd.push_back(env ? *env : kInf);
            }
            rep = make_report("N0-growth-bound", times, obs, bnd, tol);
            rep.note = "number of clusters below the fragment-count growth envelope";
        }
        out.push_back(std::move(rep));
    }

    return out;
}

std::vector<double> uniqueness_distance(const Trajectory& a, const Trajectory& b, double lambda,
                                        double theta) {
    if (a.grid.get() != b.grid.get() &&
        (a.grid->size() != b.grid->size() || a.grid->lower() != b.grid->lower() ||
         a.grid->upper() != b.grid->upper()))
        throw std::invalid_argument("uniqueness_distance: trajectories live on different grids");
    if (a.snapshots.size() != b.snapshots.size())
        throw std::invalid_argument("uniqueness_distance: snapshot counts differ");

    const double sigma = a.config.collision.sigma;
    std::vector<double> phi;
    phi.reserve(a.snapshots.size());
    for (std::size_t s = 0; s < a.snapshots.size(); ++s) {
        if (a.snapshots[s].time != b.snapshots[s].time)
            throw std::invalid_argument("uniqueness_distance: snapshot times differ");
        DensityState diff = a.snapshots[s];
        for (std::size_t i = 0; i < diff.values.size(); ++i)
            diff.values[i] = std::abs(diff.values[i] - b.snapshots[s].values[i]);
        phi.push_back(uniqueness_weight_norm(diff, lambda, theta, sigma));
    }
    return phi;
}

RefinementTable refinement_study(const SolverConfig& base, const std::vector<double>& n_list,
                                 double window_lo, double window_hi, int threads) {
    if (n_list.empty()) throw std::invalid_argument("refinement_study needs at least one n");
    for (std::size_t i = 1; i < n_list.size(); ++i)
        if (!(n_list[i] >= n_list[i - 1])) throw std::invalid_argument("n_list must be non-decreasing");
    const double n_min = n_list.front();
    if (!(window_lo >= 1.0 / n_min && window_hi <= n_min && window_lo < window_hi))
        throw std::invalid_argument("common window must lie inside [1/min(n), min(n)]");
    if (!base.initial_data) throw std::invalid_argument("refinement_study needs initial data");

    RefinementTable table;
    table.n_list = n_list;

    struct Run {
        std::shared_ptr<const GeometricGrid> grid;
        SolverConfig cfg;
        DensityState g0;
        Trajectory traj;
    };
    std::vector<Run> runs(n_list.size());

    // Initial data restricted to the window; discrete window mass matched to
    // the finest grid so that conservation is comparable across runs.
    auto masked = [&](double x) {
        return (x >= window_lo && x <= window_hi) ? base.initial_data(x) : 0.0;
    };
    double ref_mass = 0.0;
    for (std::size_t k = n_list.size(); k-- > 0;) {
        Run& run = runs[k];
        run.cfg = base;
        run.cfg.n = n_list[k];
        run.grid = std::make_shared<const GeometricGrid>(build_grid(run.cfg.n, run.cfg.cells_per_decade));
        run.g0 = init_from_function(run.grid, masked);
        const double m = moment(run.g0, 1.0);
        if (k + 1 == n_list.size()) {
            ref_mass = m;
        } else if (m > 0.0) {
            const double scale = ref_mass / m;
            for (double& v : run.g0.values) v *= scale;
        }
    }
    if (threads <= 1) {
        for (auto& run : runs) run.traj = solve(run.cfg, run.g0);
    } else {
        std::vector<std::future<Trajectory>> jobs;
        jobs.reserve(runs.size());
        for (auto& run : runs)
            jobs.push_back(std::async(std::launch::async, [&run] { return solve(run.cfg, run.g0); }));
        for (std::size_t k = 0; k < runs.size(); ++k) runs[k].traj = jobs[k].get();
    }

    for (const auto& run : runs) table.run_mass.push_back(moment(run.traj.snapshots.back(), 1.0));

    // zero extension: value of the containing cell, zero outside [1/n, n]
    auto value_at = [](const Run& run, const DensityState& snap, double x) {
        if (x < run.grid->lower() || x > run.grid->upper()) return 0.0;
        return snap.values[run.grid->locate(x)];
    };

    const Run& finest = runs.back();
    std::vector<std::size_t> window_cells;
    for (std::size_t i = 0; i < finest.grid->size(); ++i) {
        const double p = (*finest.grid)[i].pivot;
        if (p >= window_lo && p <= window_hi) window_cells.push_back(i);
    }

    for (std::size_t k = 0; k + 1 < runs.size(); ++k) {
        const Run& coarse = runs[k];
        const Run& fine = runs[k + 1];
        RefinementRow row;
        row.n_coarse = n_list[k];
        row.n_fine = n_list[k + 1];
        const std::size_t nsnap = std::min(coarse.traj.snapshots.size(), fine.traj.snapshots.size());
        for (std::size_t s = 0; s < nsnap; ++s) {
            double m_coarse[3] = {0, 0, 0}, m_fine[3] = {0, 0, 0};
            for (std::size_t ci : window_cells) {
                const Cell& c = (*finest.grid)[ci];
                const double va = value_at(coarse, coarse.traj.snapshots[s], c.pivot);
                const double vb = value_at(fine, fine.traj.snapshots[s], c.pivot);
                row.sup_diff = std::max(row.sup_diff, std::abs(va - vb));
                for (int p = 0; p < 3; ++p) {
                    const double xp = std::pow(c.pivot, p);
                    m_coarse[p] += xp * va * c.width();
                    m_fine[p] += xp * vb * c.width();
                }
            }
            for (int p = 0; p < 3; ++p)
                row.moment_diff[p] = std::max(row.moment_diff[p], std::abs(m_coarse[p] - m_fine[p]));
        }
        table.rows.push_back(row);
    }

    for (std::size_t k = 1; k < table.rows.size(); ++k)
        if (table.rows[k].sup_diff > table.rows[k - 1].sup_diff) table.cauchy = false;

    return table;
}

}  // namespace fragkin
