#include "lcgf/mvn.hpp"

#include <cmath>

#include "lcgf/errors.hpp"

namespace lcgf {

MvnSampler::MvnSampler(const Eigen::MatrixXd& cov) {
    const Eigen::Index n = cov.rows();
    if (cov.cols() != n) throw DomainError("MvnSampler: covariance must be square");
    if (n == 0) return;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
    if (ldlt.info() != Eigen::Success) throw NumericError("MvnSampler: LDLT factorization failed");
    const double floor = -1e-8 * std::max(cov.trace(), 0.0) / static_cast<double>(n);
    Eigen::VectorXd d = ldlt.vectorD();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (d(i) < floor) throw NumericError("MvnSampler: covariance is not positive semidefinite");
        d(i) = std::sqrt(std::max(d(i), 0.0));
    }
    const Eigen::MatrixXd l = ldlt.matrixL();
    // C = P^T L D L^T P.
    factor_ = ldlt.transpositionsP().transpose() * (l * d.asDiagonal());
}

void MvnSampler::sample(RngStream& rng, double* out) const {
    const Eigen::Index n = dim();
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.normal();
    Eigen::Map<Eigen::VectorXd>(out, n) = factor_ * z;
}

Eigen::VectorXd MvnSampler::sample(RngStream& rng) const {
    Eigen::VectorXd x(dim());
    sample(rng, x.data());
    return x;
}

std::vector<Eigen::VectorXd> mvn_sample(const CovarianceMatrix& cov, RngStream& rng, int count) {
    const MvnSampler s(cov.m);
    std::vector<Eigen::VectorXd> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) out.push_back(s.sample(rng));
    return out;
}

}  // namespace lcgf
