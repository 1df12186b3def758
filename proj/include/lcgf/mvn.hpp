#pragma once

#include <vector>

#include <Eigen/Dense>

#include "lcgf/green.hpp"
#include "lcgf/rng.hpp"

namespace lcgf {

// Exact N(0, C) sampler via a pivoted LDL^T factorization, so singular PSD
// matrices (zero boundary rows, cov = 0) are fine. Pivots below
// -1e-8 * trace / dim raise NumericError.
class MvnSampler {
public:
    explicit MvnSampler(const Eigen::MatrixXd& cov);

    [[nodiscard]] Eigen::Index dim() const { return factor_.rows(); }
    Eigen::VectorXd sample(RngStream& rng) const;
    void sample(RngStream& rng, double* out) const;

private:
    Eigen::MatrixXd factor_;  // C = F F^T
};

std::vector<Eigen::VectorXd> mvn_sample(const CovarianceMatrix& cov, RngStream& rng, int count);

}  // namespace lcgf
