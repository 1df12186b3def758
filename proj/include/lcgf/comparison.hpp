#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lcgf/lattice.hpp"
#include "lcgf/rng.hpp"

namespace lcgf {

struct HypothesisReport {
    double max_variance_gap = 0.0;  // max_i |C_X(i,i) - C_Y(i,i)|
    bool equal_variances = false;
    bool x_dominates_y = false;     // C_X(i,j) >= C_Y(i,j) for all i != j
    bool x_increments_below = false;  // gamma_X(i,j) <= gamma_Y(i,j) for all i, j
    double gamma = 0.0;             // max |gamma_X - gamma_Y|
    int violating_i = -1, violating_j = -1;  // first pair breaking the covariance ordering
};

// Two covariance matrices on a shared index set. Tolerance 1e-10 throughout.
struct ComparisonInstance {
    Eigen::MatrixXd x, y;
    [[nodiscard]] int size() const { return static_cast<int>(x.rows()); }
    [[nodiscard]] HypothesisReport hypotheses(double tol = 1e-10) const;
    // SHA-256 over both matrices, hex.
    [[nodiscard]] std::string hash() const;
};

// Increment variances gamma(i, j) = E (X_i - X_j)^2.
Eigen::MatrixXd increment_variances(const Eigen::MatrixXd& c);

// P(X_i <= b_i for all i) for |T| <= 3 by integrating the Plackett identity
// along R(t) = I + t (R - I) with adaptive Gauss-Kronrod quadrature.
double orthant_cdf(const Eigen::MatrixXd& cov, const Eigen::VectorXd& b);

struct Verdict {
    std::string kind;
    std::string instance_hash;
    HypothesisReport hypotheses;
    bool exact = false;
    double stat_x = 0.0, stat_y = 0.0;  // the two compared quantities
    double statistic = 0.0;  // signed margin, >= 0 when the inequality holds
    double se = 0.0;         // 0 for exact verdicts
    double bound = 0.0;      // Sudakov-Fernique bound sqrt(gamma log n)
    bool pass = false;
    std::string to_json() const;
};

// P(max X > x) <= P(max Y > x) when variances agree and C_X >= C_Y
// off the diagonal. Exact for |T| <= 3 (tolerance 1e-6) unless
// allow_exact is false, else paired MC with a 3 SE rule. Throws PreconditionError naming the violated pair.
Verdict slepian_check(const ComparisonInstance& inst, double x, std::int64_t replicas, std::uint64_t seed,
                      bool allow_exact = true);

// |E max X - E max Y| <= sqrt(gamma log n), plus E max X <= E max Y when
// gamma_X <= gamma_Y entrywise; paired MC, 3 SE slack.
Verdict sudakov_fernique_check(const ComparisonInstance& inst, std::int64_t replicas, std::uint64_t seed);

// Sets A of m vertices of V_N with pairwise Euclidean distances in [r, N/r].
std::vector<std::vector<int>> enumerate_omega(int N, int m, double r);

// P(max_A sum_A eta <= lambda) <= P(max_A sum_A chi <= lambda) for
// C_eta <= C_chi with equal variances. Guard N <= 8, m <= 3.
Verdict sum_slepian_check(const Eigen::MatrixXd& eta, const Eigen::MatrixXd& chi, int N, int m, double r,
                          double lambda, std::int64_t replicas, std::uint64_t seed);

// Random PSD instance pairs for the randomized Slepian / Sudakov-Fernique sweeps.
ComparisonInstance random_slepian_instance(int n, RngStream& rng);
ComparisonInstance random_sf_instance(int n, RngStream& rng);

// ---- perturbation experiments --------------------------------------------

using FieldDraw = std::function<void(std::uint64_t replica, std::vector<double>& out)>;

struct PerturbationSpec {
    double s1 = 0.5, s2 = 0.5;
    int r1 = 4, r2 = 4;  // block sides r1 and N / r2
    [[nodiscard]] double norm2() const { return s1 * s1 + s2 * s2; }
};

struct PerturbationPoint {
    PerturbationSpec spec;
    double ks = 0.0, lp = 0.0;
};

// Compares max(psi + s1 g_{B_r1} + s2 g_{B_{N/r2}}) - |s|^2 against max psi on
// an independent stream, for each spec. One base field per replica is shared
// by all specs (common random numbers across the grid).
std::vector<PerturbationPoint> perturbation_shift_experiment(const FieldDraw& reference, const FieldDraw& base, int N,
                                                             const std::vector<PerturbationSpec>& grid,
                                                             std::int64_t replicas, std::uint64_t seed, int workers);

struct TailPerturbationPoint {
    double epsilon = 0.0;
    std::vector<double> x;
    std::vector<double> p_perturbed, p_shifted;  // P(max(psi + eps g) >= m + x), P(max psi >= m + x - sqrt eps)
    double factor = 0.0;                          // hit-weighted mean ratio over usable x
};

// g from `noise` (one value per vertex; default Z / sqrt 2, which satisfies
// P(g >= 1 + y) <= e^{-y^2}). Both events are evaluated on the same base field.
using NoiseDraw = std::function<double(RngStream&)>;
std::vector<TailPerturbationPoint> tail_perturbation_experiment(const FieldDraw& base, int N,
                                                                const std::vector<double>& epsilons,
                                                                const std::vector<double>& x_grid,
                                                                std::int64_t replicas, std::uint64_t seed,
                                                                int workers, const NoiseDraw& noise = {},
                                                                std::int64_t min_hits = 50);

}  // namespace lcgf
