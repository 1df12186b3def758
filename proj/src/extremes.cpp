#include "lcgf/extremes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "lcgf/centering.hpp"
#include "lcgf/errors.hpp"

namespace lcgf {

Proportion wilson(std::int64_t hits, std::int64_t trials, double z) {
    Proportion out;
    out.hits = hits;
    out.trials = trials;
    if (trials <= 0) return out;
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(hits) / n;
    const double z2 = z * z;
    const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
    const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n);
    out.p = p;
    out.lo = std::max(0.0, centre - half);
    out.hi = std::min(1.0, centre + half);
    // Guard round-off at p = 0 or 1 so the interval always holds the estimate.
    out.lo = std::min(out.lo, p);
    out.hi = std::max(out.hi, p);
    return out;
}

MaxStat max_stat(const std::vector<double>& values, int N, double centering, std::uint64_t replica) {
    if (values.empty()) throw DomainError("max_stat: empty field");
    const auto it = std::max_element(values.begin(), values.end());
    const auto idx = static_cast<int>(it - values.begin());
    return {replica, *it, {idx % N, idx / N}, *it - centering};
}

std::vector<double> centered_values(const std::vector<MaxStat>& stats) {
    std::vector<double> out;
    out.reserve(stats.size());
    for (const auto& s : stats) out.push_back(s.centered);
    return out;
}

double quantile(std::vector<double> x, double q) {
    if (x.empty()) throw DomainError("quantile of empty data");
    std::sort(x.begin(), x.end());
    const double h = (static_cast<double>(x.size()) - 1) * std::clamp(q, 0.0, 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, x.size() - 1);
    return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

MaxSummary summarize(const std::vector<MaxStat>& stats) {
    if (stats.empty()) throw DomainError("centered_max: no samples");
    const auto x = centered_values(stats);
    MaxSummary s;
    s.count = static_cast<std::int64_t>(x.size());
    s.mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    s.q10 = quantile(x, 0.10);
    s.q25 = quantile(x, 0.25);
    s.median = quantile(x, 0.50);
    s.q75 = quantile(x, 0.75);
    s.q90 = quantile(x, 0.90);
    return s;
}

TailEstimate tail_slope(const std::vector<double>& x, const std::vector<double>& z_grid, std::int64_t min_hits) {
    if (z_grid.size() < 2) throw DomainError("tail_slope: need at least two grid points");
    if (x.empty()) throw DomainError("tail_slope: no samples");
    std::vector<double> sorted = x;
    std::sort(sorted.begin(), sorted.end());
    TailEstimate est;
    double sw = 0, swz = 0, swy = 0;
    for (double z : z_grid) {
        const auto k = static_cast<std::int64_t>(sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), z));
        TailPoint pt{z, wilson(k, static_cast<std::int64_t>(sorted.size())), false};
        pt.used = k >= min_hits && k < pt.survival.trials;
        if (pt.used) {
            const double w = static_cast<double>(k) / (1.0 - pt.survival.p);
            sw += w;
            swz += w * z;
            swy += w * std::log(pt.survival.p);
        }
        est.points.push_back(pt);
    }
    const auto used = std::count_if(est.points.begin(), est.points.end(), [](const TailPoint& p) { return p.used; });
    if (used < 2) {
        est.warning = "fewer than two grid points with enough exceedances; widen the grid or add replicas";
        return est;
    }
    const double zbar = swz / sw, ybar = swy / sw;
    double sxx = 0, sxy = 0;
    for (const auto& pt : est.points) {
        if (!pt.used) continue;
        const double w = static_cast<double>(pt.survival.hits) / (1.0 - pt.survival.p);
        sxx += w * (pt.z - zbar) * (pt.z - zbar);
        sxy += w * (pt.z - zbar) * (std::log(pt.survival.p) - ybar);
    }
    est.fitted = true;
    est.slope = sxy / sxx;
    est.intercept = ybar - est.slope * zbar;
    est.slope_se = std::sqrt(1.0 / sxx);
    est.slope_lo = est.slope - 1.96 * est.slope_se;
    est.slope_hi = est.slope + 1.96 * est.slope_se;
    return est;
}

GumbelShape gumbel_mixture_shape(const std::vector<double>& x, double qlo, double qhi) {
    std::vector<double> s = x;
    std::sort(s.begin(), s.end());
    const double n = static_cast<double>(s.size());
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double f = (static_cast<double>(i) + 1.0) / (n + 1.0);
        if (f < qlo || f > qhi) continue;
        xs.push_back(s[i]);
        ys.push_back(std::log(-std::log(f)));
    }
    if (xs.size() < 4) throw DomainError("gumbel_mixture_shape: too few points in the quantile range");
    GumbelShape g;
    g.points = static_cast<std::int64_t>(xs.size());
    const auto m = static_cast<Eigen::Index>(xs.size());
    const double xbar = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(m);

    auto fit = [&](int degree, Eigen::VectorXd& beta, Eigen::VectorXd& se) {
        Eigen::MatrixXd A(m, degree + 1);
        Eigen::VectorXd y(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            const double c = xs[static_cast<std::size_t>(i)] - xbar;
            for (int d = 0; d <= degree; ++d) A(i, d) = std::pow(c, d);
            y(i) = ys[static_cast<std::size_t>(i)];
        }
        beta = A.colPivHouseholderQr().solve(y);
        const double rss = (A * beta - y).squaredNorm();
        const double s2 = rss / static_cast<double>(std::max<Eigen::Index>(1, m - degree - 1));
        const Eigen::MatrixXd cov = s2 * (A.transpose() * A).inverse();
        se = cov.diagonal().cwiseSqrt();
    };
    Eigen::VectorXd b, se;
    fit(1, b, se);
    g.slope = b(1);
    g.slope_se = se(1);
    g.intercept = b(0) - b(1) * xbar;
    fit(2, b, se);
    g.curvature = b(2);
    g.curvature_se = se(2);
    return g;
}

bool has_cluster_pair(const std::vector<double>& values, int N, double r, double threshold) {
    const double lo = r, hi = static_cast<double>(N) / r;
    if (hi < lo) return false;
    std::vector<Vertex> high;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (values[i] >= threshold) high.push_back({static_cast<int>(i % N), static_cast<int>(i / N)});
    const double lo2 = lo * lo, hi2 = hi * hi;
    for (std::size_t i = 0; i < high.size(); ++i) {
        for (std::size_t j = i + 1; j < high.size(); ++j) {
            const double dx = high[i].x - high[j].x, dy = high[i].y - high[j].y;
            const double d2 = dx * dx + dy * dy;
            if (d2 >= lo2 && d2 <= hi2) return true;
        }
    }
    return false;
}

double cluster_threshold(int N, double r, double c) { return m_N(N) - c * std::log(std::log(r)); }

std::pair<int, int> localization_window(int n, double r) {
    const double l = std::log2(r);
    return {static_cast<int>(std::ceil(l - 1e-12)), static_cast<int>(std::floor(n - l + 1e-12))};
}

bool exits_tube(const Trajectories& traj, std::size_t idx, std::size_t volume, const VarianceProfile& p, int n,
                double gamma, std::pair<int, int> window) {
    const int lo = std::max(window.first, 1), hi = std::min(window.second, traj.levels);
    for (int t = lo; t <= hi; ++t) {
        const double dev = traj.at(t, idx, volume) - tube_centre(p, n, t);
        if (std::abs(dev) > tube_half_width(t, n, gamma)) return true;
    }
    return false;
}

void localization_update(LocalizationCounts& acc, const std::vector<double>& values, const Trajectories& traj, int n,
                         const VarianceProfile& p, double s, double gamma, double r) {
    if (traj.empty()) throw ConfigError("localization needs trajectories (keep_trajectories)");
    const int N = 1 << n;
    const double thr = m_N(N) - s;
    const double mx = *std::max_element(values.begin(), values.end());
    if (mx < thr) return;
    ++acc.qualifying;
    const auto window = localization_window(n, r);
    if (window.first > window.second) return;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] >= thr && exits_tube(traj, i, values.size(), p, n, gamma, window)) {
            ++acc.exiting;
            return;
        }
    }
}

bool coarse_outside(double coarse_value, const VarianceProfile& p, int kbar, double gamma) {
    const double s0 = p.sigma0();
    return std::abs(coarse_value - 2.0 * std::log(2.0) * s0 * s0 * kbar) > std::pow(kbar, gamma);
}

SubsetTail subset_max_tail(const std::vector<double>& subset_maxima, double centering, std::int64_t subset_size,
                           std::int64_t volume, double z, double y) {
    if (subset_maxima.empty() || subset_size <= 0) throw DomainError("subset_max_tail: empty input");
    const double level = centering + z - y;
    const auto k = std::count_if(subset_maxima.begin(), subset_maxima.end(), [&](double m) { return m >= level; });
    SubsetTail out;
    out.prob = wilson(k, static_cast<std::int64_t>(subset_maxima.size()));
    out.c_hat = out.prob.p * static_cast<double>(volume) / static_cast<double>(subset_size) * std::exp(2.0 * (z - y));
    return out;
}

BetaReport beta_star_estimate(const std::vector<double>& fine_maxima, const VarianceProfile& p, int n, int kbar,
                              int lbar, double gamma, const std::vector<double>& z_list, std::int64_t min_hits) {
    if (fine_maxima.empty()) throw DomainError("beta_star_estimate: no samples");
    const double s0sq = p.sigma0() * p.sigma0();
    const double kg = std::pow(static_cast<double>(kbar), gamma);
    BetaReport rep;
    rep.prefactor = std::exp(2.0 * std::log(2.0) * kbar * (1.0 - s0sq)) * std::exp(-2.0 * kg);
    const double base = M_n(p, n, kbar, n, lbar) - kg;
    double bmin = INFINITY, bmax = 0.0;
    for (double z : z_list) {
        BetaPoint pt;
        pt.z = z;
        pt.level = base + z;
        const auto k = std::count_if(fine_maxima.begin(), fine_maxima.end(), [&](double m) { return m >= pt.level; });
        pt.prob = wilson(k, static_cast<std::int64_t>(fine_maxima.size()));
        const double f = rep.prefactor * std::exp(2.0 * z);
        pt.beta = f * pt.prob.p;
        pt.beta_lo = f * pt.prob.lo;
        pt.beta_hi = f * pt.prob.hi;
        pt.used = k >= min_hits;
        if (pt.used) {
            bmin = std::min(bmin, pt.beta);
            bmax = std::max(bmax, pt.beta);
        }
        if (z > lbar * std::log(2.0)) rep.stable_window = false;
        rep.points.push_back(pt);
    }
    rep.variation = bmax > 0.0 ? bmax / bmin - 1.0 : 0.0;
    return rep;
}

Metric metric_from_string(const std::string& s) {
    if (s == "levy-prokhorov" || s == "lp") return Metric::LevyProkhorov;
    if (s == "ks") return Metric::KS;
    if (s == "one-sided" || s == "one-sided-d") return Metric::OneSided;
    throw ConfigError("unknown metric '" + s + "'");
}

namespace {
double ks(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size()), m = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() || j < b.size()) {
        const double x = j == b.size() || (i < a.size() && a[i] <= b[j]) ? a[i] : b[j];
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
    }
    return d;
}

// Largest mass of a coupling of the two empirical laws with |X - Y| < delta.
// Greedy matching in sorted order is optimal for window compatibility on a
// line. Masses are in units of 1 / (n m) to stay exact.
double matched_mass(const std::vector<double>& a, const std::vector<double>& b, double delta) {
    const auto n = static_cast<std::int64_t>(a.size()), m = static_cast<std::int64_t>(b.size());
    std::size_t i = 0, j = 0;
    std::int64_t ra = m, rb = n, matched = 0;
    while (i < a.size() && j < b.size()) {
        if (std::abs(a[i] - b[j]) < delta) {
            const std::int64_t t = std::min(ra, rb);
            matched += t;
            ra -= t;
            rb -= t;
            if (ra == 0) {
                ++i;
                ra = m;
            }
            if (rb == 0) {
                ++j;
                rb = n;
            }
        } else if (a[i] < b[j]) {
            ++i;
            ra = m;
        } else {
            ++j;
            rb = n;
        }
    }
    return static_cast<double>(matched) / (static_cast<double>(n) * static_cast<double>(m));
}

// sup_x mu((x, inf)) - nu((x - delta, inf)), attained as x rises to an atom of mu.
double one_sided_excess(const std::vector<double>& a, const std::vector<double>& b, double delta) {
    const double n = static_cast<double>(a.size()), m = static_cast<double>(b.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (i > 0 && a[i] == a[i - 1]) continue;
        const double above_a = (n - static_cast<double>(i)) / n;
        const auto jb = std::lower_bound(b.begin(), b.end(), a[i] - delta) - b.begin();
        const double above_b = (m - static_cast<double>(jb)) / m;
        worst = std::max(worst, above_a - above_b);
    }
    return worst;
}

template <class Ok>
double bisect(Ok ok, double resolution) {
    if (ok(0.0)) return 0.0;
    double lo = 0.0, hi = 1.0;
    while (hi - lo > resolution) {
        const double mid = 0.5 * (lo + hi);
        (ok(mid) ? hi : lo) = mid;
    }
    return hi;
}
}  // namespace

double dist_distance(const std::vector<double>& a, const std::vector<double>& b, Metric m, double resolution) {
    if (a.empty() || b.empty()) throw DomainError("dist_distance: empty sample set");
    std::vector<double> sa = a, sb = b;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    switch (m) {
        case Metric::KS:
            return ks(sa, sb);
        case Metric::LevyProkhorov:
            // Strassen: d <= delta iff some coupling has P(|X - Y| >= delta) <= delta.
            if (sa == sb) return 0.0;
            return bisect([&](double d) { return d > 0.0 && 1.0 - matched_mass(sa, sb, d) <= d; }, resolution);
        case Metric::OneSided:
            return bisect([&](double d) { return one_sided_excess(sa, sb, d) <= d; }, resolution);
    }
    return 0.0;
}

}  // namespace lcgf
