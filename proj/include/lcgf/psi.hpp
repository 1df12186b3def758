#pragma once

#include <cstdint>
#include <mutex>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lcgf/green.hpp"
#include "lcgf/lattice.hpp"
#include "lcgf/profile.hpp"

namespace lcgf {

using SparseRow = std::vector<std::pair<std::int64_t, double>>;

// psi as a linear image of the DGFF for a step profile with scales
// 0 = l_0 < ... < l_M = 1:
//   psi_v = sigma_M phi_v + sum_{i<M} (sigma_i - sigma_{i+1}) phi_v(l_i),
// where phi_v(l) is the exit-distribution average of phi over the ring of
// [v]_l. Kernels are shared between vertices with the same clipped box
// geometry, so applying the operator costs O(N^2 * ring size).
class PsiOperator {
public:
    PsiOperator(const BoxSpec& spec, const VarianceProfile& profile);

    [[nodiscard]] const BoxSpec& spec() const { return spec_; }
    [[nodiscard]] std::size_t kernel_count() const { return kernels_.size(); }

    // Coefficients of psi_v over BoxSpec::index, duplicates merged, terms on
    // the boundary of V_N dropped (the field vanishes there).
    [[nodiscard]] SparseRow row(Vertex v) const;

    // psi = A phi for a field stored in BoxSpec::index order.
    void apply(const std::vector<double>& phi, std::vector<double>& psi) const;

    // Var psi_v = sum_i sigma_i^2 (V(l_i) - V(l_{i-1})) with
    // V(l) = G_N(v, v) - G_{[v]_l^o}(v, v): the increments of the conditional
    // expectations are orthogonal.
    [[nodiscard]] double variance(Vertex v) const;
    [[nodiscard]] std::vector<double> variances() const;

    // G_{V_N}(v, v) for all v (BoxSpec::index order).
    [[nodiscard]] const std::vector<double>& green_diagonal() const;

private:
    struct Term {
        int dx, dy;
        double w;
    };
    struct Kernel {
        std::vector<Term> terms;  // empty means the point mass at v
        double g_inner = 0.0;     // G of the box interior at v
    };
    int kernel_for(Vertex v, const Rect& box);

    BoxSpec spec_;
    std::vector<double> sigmas_;
    std::vector<double> scales_;
    std::vector<int> half_widths_;   // per interior scale
    double self_coeff_ = 0.0;
    std::vector<double> scale_coeff_;
    std::vector<Kernel> kernels_;
    std::vector<std::vector<std::int32_t>> kernel_id_;  // [scale][vertex]
    mutable std::once_flag diag_once_;
    mutable std::vector<double> diag_;
};

struct LinearFunctionalMatrix {
    BoxSpec spec;
    std::vector<double> scales;
    Eigen::MatrixXd A;  // row v: coefficients of psi_v, BoxSpec::index order
};

// Dense A; throws SizeError for N > max_side.
LinearFunctionalMatrix psi_functional_matrix(const BoxSpec& spec, const VarianceProfile& profile,
                                             int max_side = 64);

// Exact covariance A G A^T restricted to `vertices`, using a dense G.
CovarianceMatrix psi_covariance(const PsiOperator& op, const CovarianceMatrix& green,
                                const std::vector<Vertex>& vertices);

// Exact Cov(psi_u, psi_v) for each v in vs without a dense G (Green rows
// from the sine expansion); suitable for a handful of u at larger N.
std::vector<double> psi_covariance_row(const PsiOperator& op, Vertex u,
                                       const std::vector<Vertex>& vs);

}  // namespace lcgf
