#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lcgf/brw.hpp"
#include "lcgf/extremes.hpp"
#include "lcgf/law_check.hpp"
#include "lcgf/profile.hpp"
#include "lcgf/three_field.hpp"

namespace lcgf {

// One replica of a field on V_N (BoxSpec::index order); trajectories are
// filled only when requested and the model has them.
using ReplicaDraw = std::function<void(std::uint64_t replica, std::vector<double>& out, Trajectories* traj)>;

struct FieldModel {
    std::string name;
    int N = 0;
    bool has_trajectories = false;
    ReplicaDraw draw;
};

// name: dgff | psi | ibrw | mibrw. Streams are keyed by (seed, replica).
FieldModel make_field_model(const std::string& name, int N, const VarianceProfile& p, std::uint64_t seed);

// Exact covariance of a model on V_N (dense; N <= 16 in practice).
Eigen::MatrixXd exact_model_covariance(const std::string& name, int N, const VarianceProfile& p);

// Empirical second moment from `replicas` draws, compared entrywise.
LawCheck model_law_check(const FieldModel& m, const Eigen::MatrixXd& exact, int replicas, double k_se);

// Maxima of `replicas` draws, centered by `centering`.
std::vector<MaxStat> collect_maxima(const FieldModel& m, std::int64_t replicas, double centering, int workers);

// Pair-cluster probabilities at thresholds m_N - c ln ln r.
std::vector<ClusterPoint> cluster_experiment(const FieldModel& m, const std::vector<double>& r_grid, double c,
                                             std::int64_t replicas, int workers);

struct LocalizationCell {
    double r = 0.0, gamma = 0.0, s = 0.0;
    LocalizationCounts counts;
};
// All (r, gamma, s) combinations evaluated on the same draws.
std::vector<LocalizationCell> localization_experiment(const FieldModel& m, const VarianceProfile& p,
                                                      const std::vector<double>& r_grid,
                                                      const std::vector<double>& gamma_grid,
                                                      const std::vector<double>& s_grid, std::int64_t replicas,
                                                      int workers);

struct SurrogatePoint {
    ThreeFieldParams params;
    MatchResult match;
    BetaReport beta;
    double beta_hat = 0.0;  // mean of the usable beta estimates; NaN if none
    double p_rho = 0.0;
    bool clamped = false;
    std::int64_t empty = 0;  // surrogate replicas without an active cell
    std::int64_t replicas = 0, surrogate_replicas = 0;
    double ks = 1.0;
    double d_min = 0.0;
    std::int64_t d_positive = 0;
    std::vector<double> field_max, surrogate_max;  // centered field maxima and G*
};

// Matches the three-field constants, samples centered maxima of S^N
// (centering M_n(0, n)), estimates beta* from per-box fine maxima and
// compares with the surrogate G* driven by that beta*.
SurrogatePoint surrogate_experiment(ThreeFieldParams params, std::int64_t replicas, std::int64_t surrogate_replicas,
                                    std::uint64_t seed, double gamma, const std::vector<double>& beta_z, int workers);

}  // namespace lcgf
