#include "lcgf/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>

#include "lcgf/brw_cov.hpp"
#include "lcgf/centering.hpp"
#include "lcgf/dgff.hpp"
#include "lcgf/errors.hpp"
#include "lcgf/green.hpp"
#include "lcgf/parallel.hpp"
#include "lcgf/psi.hpp"
#include "lcgf/surrogate.hpp"

namespace lcgf {

namespace {
int exponent_of(int N) {
    int n = 0;
    while ((1 << n) < N) ++n;
    if ((1 << n) != N || n < 1) throw ConfigError("N must be a power of two >= 2, got " + std::to_string(N));
    return n;
}
}  // namespace

FieldModel make_field_model(const std::string& name, int N, const VarianceProfile& p, std::uint64_t seed) {
    const int n = exponent_of(N);
    FieldModel m;
    m.name = name;
    m.N = N;
    if (name == "dgff") {
        auto s = std::make_shared<DgffSampler>(N);
        m.draw = [s, seed](std::uint64_t r, std::vector<double>& out, Trajectories*) {
            RngStream rng(seed, r, Component::Field);
            s->sample(rng, out);
        };
    } else if (name == "psi") {
        auto s = std::make_shared<PsiSampler>(BoxSpec(n), p);
        m.draw = [s, seed](std::uint64_t r, std::vector<double>& out, Trajectories*) {
            RngStream rng(seed, r, Component::Field);
            s->sample(rng, out);
        };
    } else if (name == "ibrw") {
        auto s = std::make_shared<IbrwSampler>(p, n);
        m.has_trajectories = true;
        m.draw = [s, seed](std::uint64_t r, std::vector<double>& out, Trajectories* traj) {
            RngStream rng(seed, r, Component::Field);
            s->sample(rng, out, traj);
        };
    } else if (name == "mibrw") {
        auto s = std::make_shared<MibrwSampler>(p, n);
        m.has_trajectories = true;
        m.draw = [s, seed](std::uint64_t r, std::vector<double>& out, Trajectories* traj) {
            RngStream rng(seed, r, Component::Field);
            s->sample(rng, out, traj);
        };
    } else {
        throw ConfigError("unknown model '" + name + "' (dgff, psi, ibrw, mibrw)");
    }
    return m;
}

Eigen::MatrixXd exact_model_covariance(const std::string& name, int N, const VarianceProfile& p) {
    const int n = exponent_of(N);
    if (N > 16) throw SizeError("exact_model_covariance: N <= 16");
    const BoxSpec spec(n);
    const int V = N * N;
    if (name == "dgff") return green_matrix(spec).m;
    if (name == "psi") {
        std::vector<Vertex> all;
        for (int i = 0; i < V; ++i) all.push_back(spec.vertex(i));
        return psi_covariance(PsiOperator(spec, p), green_matrix(spec), all).m;
    }
    if (name != "ibrw" && name != "mibrw") throw ConfigError("unknown model '" + name + "'");
    const auto w = level_weights(p, n);
    Eigen::MatrixXd c(V, V);
    for (int i = 0; i < V; ++i)
        for (int j = 0; j < V; ++j)
            c(i, j) = name == "ibrw" ? ibrw_cov(w, spec.vertex(i), spec.vertex(j))
                                     : mibrw_cov(w, N, spec.vertex(i), spec.vertex(j));
    return c;
}

LawCheck model_law_check(const FieldModel& m, const Eigen::MatrixXd& exact, int replicas, double k_se) {
    std::vector<double> f;
    const auto emp = empirical_second_moment(m.N * m.N, replicas, [&](int r, double* out) {
        m.draw(static_cast<std::uint64_t>(r), f, nullptr);
        std::copy(f.begin(), f.end(), out);
    });
    return compare_law(exact, emp, replicas, k_se);
}

std::vector<MaxStat> collect_maxima(const FieldModel& m, std::int64_t replicas, double centering, int workers) {
    std::vector<MaxStat> out(static_cast<std::size_t>(replicas));
    parallel_for(replicas, workers, [&](std::int64_t r) {
        std::vector<double> f;
        m.draw(static_cast<std::uint64_t>(r), f, nullptr);
        out[static_cast<std::size_t>(r)] = max_stat(f, m.N, centering, static_cast<std::uint64_t>(r));
    });
    return out;
}

std::vector<ClusterPoint> cluster_experiment(const FieldModel& m, const std::vector<double>& r_grid, double c,
                                             std::int64_t replicas, int workers) {
    const std::size_t G = r_grid.size();
    std::vector<std::uint8_t> hit(G * static_cast<std::size_t>(replicas), 0);
    std::vector<double> thr(G);
    for (std::size_t i = 0; i < G; ++i) thr[i] = cluster_threshold(m.N, r_grid[i], c);
    parallel_for(replicas, workers, [&](std::int64_t r) {
        std::vector<double> f;
        m.draw(static_cast<std::uint64_t>(r), f, nullptr);
        for (std::size_t i = 0; i < G; ++i)
            hit[static_cast<std::size_t>(r) * G + i] = has_cluster_pair(f, m.N, r_grid[i], thr[i]);
    });
    std::vector<ClusterPoint> out(G);
    for (std::size_t i = 0; i < G; ++i) {
        std::int64_t h = 0;
        for (std::int64_t r = 0; r < replicas; ++r) h += hit[static_cast<std::size_t>(r) * G + i];
        out[i].r = r_grid[i];
        out[i].threshold = thr[i];
        out[i].empty_constraint = static_cast<double>(m.N) / r_grid[i] < r_grid[i];
        out[i].prob = wilson(h, replicas);
    }
    return out;
}

std::vector<LocalizationCell> localization_experiment(const FieldModel& m, const VarianceProfile& p,
                                                      const std::vector<double>& r_grid,
                                                      const std::vector<double>& gamma_grid,
                                                      const std::vector<double>& s_grid, std::int64_t replicas,
                                                      int workers) {
    if (!m.has_trajectories) throw ConfigError("localization needs a model with trajectories (ibrw, mibrw)");
    const int n = exponent_of(m.N);
    std::vector<LocalizationCell> cells;
    for (double r : r_grid)
        for (double g : gamma_grid)
            for (double s : s_grid) cells.push_back({r, g, s, {}});
    std::mutex mu;
    parallel_for(replicas, workers, [&](std::int64_t rep) {
        std::vector<double> f;
        Trajectories traj;
        m.draw(static_cast<std::uint64_t>(rep), f, &traj);
        std::vector<LocalizationCounts> local(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i)
            localization_update(local[i], f, traj, n, p, cells[i].s, cells[i].gamma, cells[i].r);
        const std::lock_guard lock(mu);
        for (std::size_t i = 0; i < cells.size(); ++i) {
            cells[i].counts.qualifying += local[i].qualifying;
            cells[i].counts.exiting += local[i].exiting;
        }
    });
    return cells;
}

SurrogatePoint surrogate_experiment(ThreeFieldParams params, std::int64_t replicas, std::int64_t surrogate_replicas,
                                    std::uint64_t seed, double gamma, const std::vector<double>& beta_z, int workers) {
    params.a.clear();
    params.validate();
    SurrogatePoint out;
    const auto psi_var = PsiOperator(BoxSpec(params.n), params.profile).variances();
    out.match = variance_match_constants(ThreeFieldSampler(params), psi_var);
    params.a = out.match.a;
    out.params = params;
    const ThreeFieldSampler sampler(params);

    const double centering = M_n(params.profile, params.n, 0, params.n, params.lbar());
    const std::size_t boxes = static_cast<std::size_t>(params.KL()) * params.KL();
    out.replicas = replicas;
    out.field_max.resize(static_cast<std::size_t>(replicas));
    std::vector<double> fine(static_cast<std::size_t>(replicas) * boxes);
    parallel_for(replicas, workers, [&](std::int64_t r) {
        ThreeFieldDraw d;
        sampler.sample(seed, static_cast<std::uint64_t>(r), d);
        out.field_max[static_cast<std::size_t>(r)] = *std::max_element(d.total.begin(), d.total.end()) - centering;
        std::copy(d.fine_box_max.begin(), d.fine_box_max.end(), fine.begin() + static_cast<std::ptrdiff_t>(r * static_cast<std::int64_t>(boxes)));
    });
    out.beta = beta_star_estimate(fine, params.profile, params.n, params.kbar(), params.lbar(), gamma, beta_z);
    double sum = 0.0;
    int used = 0;
    for (const auto& pt : out.beta.points)
        if (pt.used) {
            sum += pt.beta;
            ++used;
        }
    out.beta_hat = used > 0 ? sum / used : std::numeric_limits<double>::quiet_NaN();
    if (used == 0) return out;

    SurrogateParams sp;
    sp.k = params.k;
    sp.l = params.l;
    sp.gamma = gamma;
    sp.beta_star = out.beta_hat;
    sp.profile = params.profile;
    const SurrogateSampler ss(sp);
    out.p_rho = ss.probability();
    out.clamped = ss.clamped();
    out.surrogate_replicas = surrogate_replicas;
    out.surrogate_max.resize(static_cast<std::size_t>(surrogate_replicas));
    std::vector<double> dkl(static_cast<std::size_t>(surrogate_replicas));
    std::vector<std::uint8_t> empty(static_cast<std::size_t>(surrogate_replicas));
    // Surrogate streams use their own components, so sharing the seed is safe.
    parallel_for(surrogate_replicas, workers, [&](std::int64_t r) {
        SurrogateDraw d;
        ss.sample(seed, static_cast<std::uint64_t>(r), d);
        const auto i = static_cast<std::size_t>(r);
        // No active cell: G* = -infinity, which sits below every field maximum.
        out.surrogate_max[i] = d.empty ? -std::numeric_limits<double>::infinity() : d.g_star;
        empty[i] = d.empty;
        dkl[i] = d.d_kl;
    });
    out.d_min = *std::min_element(dkl.begin(), dkl.end());
    out.d_positive = std::count_if(dkl.begin(), dkl.end(), [](double v) { return v > 0.0; });
    out.empty = std::count(empty.begin(), empty.end(), std::uint8_t{1});
    out.ks = dist_distance(out.field_max, out.surrogate_max, Metric::KS);
    return out;
}

}  // namespace lcgf
