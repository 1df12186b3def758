#pragma once

#include <cmath>
#include <cstdint>
#include <functional>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

namespace lcgf {

// Entrywise comparison of an empirical second-moment matrix against an exact
// zero-mean covariance. The standard error of the mean of X_u X_v under a
// Gaussian law is sqrt((C_uu C_vv + C_uv^2) / R); entries with zero variance
// must come out exactly zero.
struct LawCheck {
    std::int64_t entries = 0;
    std::int64_t violations = 0;  // |Chat - C| > k * SE
    std::int64_t degenerate_nonzero = 0;
    double worst_z = 0.0;
    int worst_u = -1, worst_v = -1;
    [[nodiscard]] bool ok() const { return violations == 0 && degenerate_nonzero == 0; }
};

inline Eigen::MatrixXd empirical_second_moment(int dim, int replicas,
                                               const std::function<void(int, double*)>& draw) {
    // Column-major R x dim so each draw fills one row via a strided copy.
    Eigen::MatrixXd x(replicas, dim);
    Eigen::VectorXd row(dim);
    for (int r = 0; r < replicas; ++r) {
        draw(r, row.data());
        x.row(r) = row.transpose();
    }
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(dim, dim);
    s.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
    s = s.selfadjointView<Eigen::Lower>();
    return s / replicas;
}

inline LawCheck compare_law(const Eigen::MatrixXd& exact, const Eigen::MatrixXd& emp, int replicas,
                            double k_se = 4.0) {
    LawCheck out;
    for (int u = 0; u < exact.rows(); ++u) {
        for (int v = u; v < exact.cols(); ++v) {
            ++out.entries;
            const double c = exact(u, v);
            const double se = std::sqrt((exact(u, u) * exact(v, v) + c * c) / replicas);
            const double diff = std::abs(emp(u, v) - c);
            if (se <= 1e-14) {
                if (diff > 1e-12) ++out.degenerate_nonzero;
                continue;
            }
            const double z = diff / se;
            if (z > out.worst_z) {
                out.worst_z = z;
                out.worst_u = u;
                out.worst_v = v;
            }
            if (z > k_se) ++out.violations;
        }
    }
    return out;
}

// Two-sided per-entry threshold giving a family-wise false-alarm rate of
// `fwer` over `entries` comparisons (Bonferroni). Keeps a fixed seed from
// turning chance excursions into failures.
inline double familywise_k(std::int64_t entries, double fwer = 1e-3) {
    const boost::math::normal z;
    return boost::math::quantile(boost::math::complement(z, fwer / (2.0 * static_cast<double>(entries))));
}

inline LawCheck compare_law_familywise(const Eigen::MatrixXd& exact, const Eigen::MatrixXd& emp, int replicas) {
    const std::int64_t m = exact.rows() * (exact.rows() + 1) / 2;
    return compare_law(exact, emp, replicas, familywise_k(m));
}

}  // namespace lcgf
