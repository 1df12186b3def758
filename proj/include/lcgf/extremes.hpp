#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lcgf/brw.hpp"
#include "lcgf/lattice.hpp"
#include "lcgf/profile.hpp"

namespace lcgf {

// Binomial proportion with a Wilson score interval.
struct Proportion {
    std::int64_t hits = 0;
    std::int64_t trials = 0;
    double p = 0.0, lo = 0.0, hi = 1.0;
};
Proportion wilson(std::int64_t hits, std::int64_t trials, double z = 1.959963984540054);

struct MaxStat {
    std::uint64_t replica = 0;
    double max = 0.0;
    Vertex argmax{};
    double centered = 0.0;
};

// Maximum of one field (BoxSpec::index layout, side N).
MaxStat max_stat(const std::vector<double>& values, int N, double centering, std::uint64_t replica = 0);

struct MaxSummary {
    std::int64_t count = 0;
    double mean = 0.0, q10 = 0.0, q25 = 0.0, median = 0.0, q75 = 0.0, q90 = 0.0;
    [[nodiscard]] double iqr() const { return q75 - q25; }
};
// Summary of the centered values. Throws DomainError on empty input.
MaxSummary summarize(const std::vector<MaxStat>& stats);
std::vector<double> centered_values(const std::vector<MaxStat>& stats);

// Empirical quantile (type 7, linear interpolation) of unsorted data.
double quantile(std::vector<double> x, double q);

// ---- tails -------------------------------------------------------------

struct TailPoint {
    double z = 0.0;
    Proportion survival;  // P(X >= z)
    bool used = false;    // enough exceedances to enter the fit
};

struct TailEstimate {
    std::vector<TailPoint> points;
    bool fitted = false;
    double slope = 0.0, slope_se = 0.0, intercept = 0.0;
    double slope_lo = 0.0, slope_hi = 0.0;  // 95% interval
    std::string warning;
};

// Weighted least squares of ln P(X >= z) on z over grid points with at least
// `min_hits` exceedances; weights k / (1 - p) from the delta method.
// Throws DomainError for fewer than two grid points or empty data.
TailEstimate tail_slope(const std::vector<double>& x, const std::vector<double>& z_grid, std::int64_t min_hits = 50);

struct GumbelShape {
    std::int64_t points = 0;
    double slope = 0.0, slope_se = 0.0, intercept = 0.0;
    double curvature = 0.0, curvature_se = 0.0;  // quadratic term of the double-log fit
};
// Fits ln(-ln F(x)) against x on the order statistics between quantiles qlo
// and qhi, with F the plotting position i / (n + 1).
GumbelShape gumbel_mixture_shape(const std::vector<double>& x, double qlo = 0.1, double qhi = 0.9);

// ---- cluster geometry -----------------------------------------------------

// Whether some pair u, v with r <= |u - v|_2 <= N / r has both values >= threshold.
bool has_cluster_pair(const std::vector<double>& values, int N, double r, double threshold);

struct ClusterPoint {
    double r = 0.0;
    double threshold = 0.0;
    bool empty_constraint = false;  // N / r < r
    Proportion prob;
};
struct ClusterStat {
    double c = 1.0;
    std::vector<ClusterPoint> points;
};
// Threshold for scale r: m_N - c ln ln r (natural logs).
double cluster_threshold(int N, double r, double c);

// ---- localization ---------------------------------------------------------

struct TubeSpec {
    double gamma = 0.6;
    // Centre 2 ln2 I(t/n) n, half-width min(t, n - t)^gamma.
};

// Integer window [ceil(log2 r), floor(n - log2 r)]; empty when lo > hi.
std::pair<int, int> localization_window(int n, double r);

// Whether the partial-sum path t -> traj(t, idx) leaves the tube at some t in
// the window.
bool exits_tube(const Trajectories& traj, std::size_t idx, std::size_t volume, const VarianceProfile& p, int n,
                double gamma, std::pair<int, int> window);

struct LocalizationCounts {
    std::int64_t qualifying = 0;  // replicas with max >= m_N - s
    std::int64_t exiting = 0;     // ... of which some high vertex leaves the tube
    [[nodiscard]] Proportion fraction() const { return wilson(exiting, qualifying); }
};
// One replica: adds to the counts. High vertices are those >= m_N - s.
void localization_update(LocalizationCounts& acc, const std::vector<double>& values, const Trajectories& traj, int n,
                         const VarianceProfile& p, double s, double gamma, double r);

// Coarse-field version: the coarse value at a high vertex lies outside
// 2 ln2 sigma0^2 kbar +- kbar^gamma.
bool coarse_outside(double coarse_value, const VarianceProfile& p, int kbar, double gamma);

// ---- subset maxima -----------------------------------------------------------

struct SubsetTail {
    Proportion prob;  // P(max_A >= m_N + z - y)
    double c_hat = 0.0;  // prob * |V| / |A| * e^{2 (z - y)}
};
SubsetTail subset_max_tail(const std::vector<double>& subset_maxima, double centering, std::int64_t subset_size,
                           std::int64_t volume, double z, double y);

// ---- beta* ------------------------------------------------------------------

struct BetaPoint {
    double z = 0.0;
    double level = 0.0;  // M_n(kbar, n) - kbar^gamma + z
    Proportion prob;
    double beta = 0.0, beta_lo = 0.0, beta_hi = 0.0;
    bool used = false;
};
struct BetaReport {
    double prefactor = 0.0;  // e^{2 ln2 kbar (1 - sigma0^2)} e^{-2 kbar^gamma}, times e^{2z} per point
    std::vector<BetaPoint> points;
    double variation = 0.0;  // max/min - 1 over the used points
    bool stable_window = true;  // every z within ln(K'L')
};
// fine_maxima: maxima of S - S^c over single N/KL boxes, pooled.
BetaReport beta_star_estimate(const std::vector<double>& fine_maxima, const VarianceProfile& p, int n, int kbar,
                              int lbar, double gamma, const std::vector<double>& z_list, std::int64_t min_hits = 30);

// ---- distances between empirical laws -------------------------------------------

enum class Metric { LevyProkhorov, KS, OneSided };
Metric metric_from_string(const std::string& s);
// Levy-Prokhorov and the one-sided distance are found by bisection to
// `resolution`; KS is exact.
double dist_distance(const std::vector<double>& a, const std::vector<double>& b, Metric m, double resolution = 1e-3);

}  // namespace lcgf
