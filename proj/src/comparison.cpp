#include "lcgf/comparison.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/constants/constants.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <json.hpp>

#include "lcgf/centering.hpp"
#include "lcgf/digest.hpp"
#include "lcgf/extremes.hpp"
#include "lcgf/errors.hpp"
#include "lcgf/mvn.hpp"
#include "lcgf/parallel.hpp"

namespace lcgf {

namespace {
double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double binorm_pdf(double x, double y, double rho) {
    const double q = 1.0 - rho * rho;
    return std::exp(-(x * x - 2 * rho * x * y + y * y) / (2 * q)) / (2 * boost::math::constants::pi<double>() * std::sqrt(q));
}

struct MeanSe {
    double mean = 0.0, se = 0.0;
};
MeanSe mean_se(const std::vector<double>& v) {
    MeanSe out;
    const double n = static_cast<double>(v.size());
    double s = 0, s2 = 0;
    for (double x : v) {
        s += x;
        s2 += x * x;
    }
    out.mean = s / n;
    const double var = std::max(0.0, s2 / n - out.mean * out.mean) * n / std::max(1.0, n - 1);
    out.se = std::sqrt(var / n);
    return out;
}

std::string fmt_pair(int i, int j) {
    std::ostringstream s;
    s << "(" << i << ", " << j << ")";
    return s.str();
}
}  // namespace

Eigen::MatrixXd increment_variances(const Eigen::MatrixXd& c) {
    const auto n = c.rows();
    Eigen::MatrixXd g(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) g(i, j) = c(i, i) + c(j, j) - 2 * c(i, j);
    return g;
}

HypothesisReport ComparisonInstance::hypotheses(double tol) const {
    if (x.rows() != y.rows() || x.rows() != x.cols() || y.rows() != y.cols()) {
        throw DomainError("comparison instance: matrices must be square and of equal size");
    }
    HypothesisReport h;
    const auto n = x.rows();
    for (Eigen::Index i = 0; i < n; ++i) h.max_variance_gap = std::max(h.max_variance_gap, std::abs(x(i, i) - y(i, i)));
    h.equal_variances = h.max_variance_gap <= tol;
    h.x_dominates_y = true;
    for (Eigen::Index i = 0; i < n && h.x_dominates_y; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (i != j && x(i, j) < y(i, j) - tol) {
                h.x_dominates_y = false;
                h.violating_i = static_cast<int>(i);
                h.violating_j = static_cast<int>(j);
                break;
            }
    const auto gx = increment_variances(x), gy = increment_variances(y);
    h.gamma = (gx - gy).cwiseAbs().maxCoeff();
    h.x_increments_below = ((gx - gy).array() <= tol).all();
    return h;
}

std::string ComparisonInstance::hash() const {
    std::string bytes;
    for (const auto* m : {&x, &y}) {
        const std::int64_t n = m->rows();
        bytes.append(reinterpret_cast<const char*>(&n), sizeof n);
        bytes.append(reinterpret_cast<const char*>(m->data()), static_cast<std::size_t>(m->size()) * sizeof(double));
    }
    return sha256_hex(bytes);
}

double orthant_cdf(const Eigen::MatrixXd& cov, const Eigen::VectorXd& b) {
    const auto n = cov.rows();
    if (n < 1 || n > 3 || b.size() != n) throw SizeError("orthant_cdf: dimension must be 1, 2 or 3");
    Eigen::VectorXd s(n), z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(cov(i, i) > 0.0)) throw DomainError("orthant_cdf: variances must be positive");
        s(i) = std::sqrt(cov(i, i));
        z(i) = b(i) / s(i);
    }
    Eigen::MatrixXd r(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) r(i, j) = cov(i, j) / (s(i) * s(j));
    double base = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) base *= norm_cdf(z(i));
    if (n == 1) return base;

    // d/dt Phi_n(z; I + t(R - I)) = sum_{i<j} R_ij phi2(z_i, z_j; t R_ij) P(rest <= z | X_i = z_i, X_j = z_j).
    auto deriv = [&](double t) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                const double rho = t * r(i, j);
                if (r(i, j) == 0.0) continue;
                double cond = 1.0;
                if (n == 3) {
                    const int k = 3 - i - j;
                    const double a = t * r(i, k), c = t * r(j, k);
                    const double det = 1 - rho * rho;
                    const double wi = (a - rho * c) / det, wj = (c - rho * a) / det;
                    const double mu = wi * z(i) + wj * z(j);
                    const double var = std::max(1e-300, 1.0 - (wi * a + wj * c));
                    cond = norm_cdf((z(k) - mu) / std::sqrt(var));
                }
                total += r(i, j) * binorm_pdf(z(i), z(j), rho) * cond;
            }
        }
        return total;
    };
    const double integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(deriv, 0.0, 1.0, 15, 1e-13);
    return std::clamp(base + integral, 0.0, 1.0);
}

std::string Verdict::to_json() const {
    nlohmann::json j;
    j["kind"] = kind;
    j["instance_hash"] = instance_hash;
    j["hypotheses"] = {{"max_variance_gap", hypotheses.max_variance_gap},
                       {"equal_variances", hypotheses.equal_variances},
                       {"x_dominates_y", hypotheses.x_dominates_y},
                       {"x_increments_below", hypotheses.x_increments_below},
                       {"gamma", hypotheses.gamma}};
    j["exact"] = exact;
    j["stat_x"] = stat_x;
    j["stat_y"] = stat_y;
    j["statistic"] = statistic;
    j["se"] = se;
    j["bound"] = bound;
    j["verdict"] = pass ? "pass" : "fail";
    return j.dump();
}

namespace {
// Paired draws: X = F_x z and Y = F_y z from one standard normal vector z.
struct PairedFactors {
    Eigen::MatrixXd fx, fy;
    PairedFactors(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
        fx = factor(x);
        fy = factor(y);
    }
    static Eigen::MatrixXd factor(const Eigen::MatrixXd& c) {
        // Symmetric square root keeps the pairing meaningful for any PSD input.
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
        const Eigen::VectorXd ev = es.eigenvalues();
        if (ev.minCoeff() < -1e-8 * std::max(1.0, ev.cwiseAbs().maxCoeff())) {
            throw NumericError("comparison: covariance is not positive semidefinite");
        }
        return es.eigenvectors() * ev.cwiseMax(0.0).cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
    }
};
}  // namespace

Verdict slepian_check(const ComparisonInstance& inst, double x, std::int64_t replicas, std::uint64_t seed,
                      bool allow_exact) {
    Verdict v;
    v.kind = "slepian";
    v.instance_hash = inst.hash();
    v.hypotheses = inst.hypotheses();
    if (!v.hypotheses.equal_variances) throw PreconditionError("slepian_check: variances differ (max gap " + std::to_string(v.hypotheses.max_variance_gap) + ")");
    if (!v.hypotheses.x_dominates_y) {
        throw PreconditionError("slepian_check: Cov X < Cov Y at pair " + fmt_pair(v.hypotheses.violating_i, v.hypotheses.violating_j));
    }
    const int n = inst.size();
    bool degenerate = false;
    for (int i = 0; i < n; ++i) degenerate = degenerate || !(inst.x(i, i) > 0.0);
    if (allow_exact && n <= 3 && !degenerate) {
        const Eigen::VectorXd b = Eigen::VectorXd::Constant(n, x);
        v.exact = true;
        v.stat_x = 1.0 - orthant_cdf(inst.x, b);
        v.stat_y = 1.0 - orthant_cdf(inst.y, b);
        v.statistic = v.stat_y - v.stat_x;
        v.pass = v.statistic >= -1e-6;
        return v;
    }
    const PairedFactors f(inst.x, inst.y);
    RngStream rng(seed, 0, Component::Paired);
    std::vector<double> d(static_cast<std::size_t>(replicas));
    Eigen::VectorXd z(n);
    std::int64_t hx = 0, hy = 0;
    for (std::int64_t r = 0; r < replicas; ++r) {
        for (int i = 0; i < n; ++i) z(i) = rng.normal();
        const bool ex = (f.fx * z).maxCoeff() > x;
        const bool ey = (f.fy * z).maxCoeff() > x;
        hx += ex;
        hy += ey;
        d[static_cast<std::size_t>(r)] = static_cast<double>(ey) - static_cast<double>(ex);
    }
    const auto ms = mean_se(d);
    v.stat_x = static_cast<double>(hx) / static_cast<double>(replicas);
    v.stat_y = static_cast<double>(hy) / static_cast<double>(replicas);
    v.statistic = ms.mean;
    v.se = ms.se;
    v.pass = v.statistic >= -3.0 * v.se;
    return v;
}

Verdict sudakov_fernique_check(const ComparisonInstance& inst, std::int64_t replicas, std::uint64_t seed) {
    Verdict v;
    v.kind = "sudakov-fernique";
    v.instance_hash = inst.hash();
    v.hypotheses = inst.hypotheses();
    const int n = inst.size();
    v.bound = std::sqrt(v.hypotheses.gamma * std::log(static_cast<double>(n)));
    const PairedFactors f(inst.x, inst.y);
    RngStream rng(seed, 0, Component::Paired);
    std::vector<double> d(static_cast<std::size_t>(replicas));
    Eigen::VectorXd z(n);
    double sx = 0, sy = 0;
    for (std::int64_t r = 0; r < replicas; ++r) {
        for (int i = 0; i < n; ++i) z(i) = rng.normal();
        const double mx = (f.fx * z).maxCoeff(), my = (f.fy * z).maxCoeff();
        sx += mx;
        sy += my;
        d[static_cast<std::size_t>(r)] = my - mx;
    }
    const auto ms = mean_se(d);
    v.stat_x = sx / static_cast<double>(replicas);
    v.stat_y = sy / static_cast<double>(replicas);
    v.se = ms.se;
    v.statistic = v.bound - std::abs(ms.mean);
    v.pass = v.statistic >= -3.0 * v.se;
    // Ordered increments: E max X <= E max Y.
    if (v.hypotheses.x_increments_below) v.pass = v.pass && ms.mean >= -3.0 * v.se;
    return v;
}

std::vector<std::vector<int>> enumerate_omega(int N, int m, double r) {
    if (N > 8 || m > 3 || m < 1) throw SizeError("enumerate_omega: guard is N <= 8, 1 <= m <= 3");
    const int V = N * N;
    const double lo2 = r * r, hi2 = (static_cast<double>(N) / r) * (static_cast<double>(N) / r);
    auto ok = [&](int a, int b) {
        const double dx = a % N - b % N, dy = a / N - b / N;
        const double d2 = dx * dx + dy * dy;
        return d2 >= lo2 && d2 <= hi2;
    };
    std::vector<std::vector<int>> out;
    if (m == 1) {
        for (int a = 0; a < V; ++a) out.push_back({a});
        return out;
    }
    for (int a = 0; a < V; ++a)
        for (int b = a + 1; b < V; ++b) {
            if (!ok(a, b)) continue;
            if (m == 2) {
                out.push_back({a, b});
                continue;
            }
            for (int c = b + 1; c < V; ++c)
                if (ok(a, c) && ok(b, c)) out.push_back({a, b, c});
        }
    return out;
}

Verdict sum_slepian_check(const Eigen::MatrixXd& eta, const Eigen::MatrixXd& chi, int N, int m, double r,
                          double lambda, std::int64_t replicas, std::uint64_t seed) {
    if (eta.rows() != N * N || chi.rows() != N * N) throw DomainError("sum_slepian_check: matrices must be N^2 x N^2");
    const auto omega = enumerate_omega(N, m, r);
    // Hypotheses: C_eta <= C_chi, equal variances; i.e. chi plays the role of X.
    ComparisonInstance inst{chi, eta};
    Verdict v;
    v.kind = "sum-slepian";
    v.instance_hash = inst.hash();
    v.hypotheses = inst.hypotheses();
    if (!v.hypotheses.equal_variances) throw PreconditionError("sum_slepian_check: variances differ");
    if (!v.hypotheses.x_dominates_y) {
        throw PreconditionError("sum_slepian_check: Cov eta > Cov chi at pair " + fmt_pair(v.hypotheses.violating_i, v.hypotheses.violating_j));
    }
    const PairedFactors f(eta, chi);
    RngStream rng(seed, 0, Component::Paired);
    const int V = N * N;
    Eigen::VectorXd z(V);
    std::vector<double> d(static_cast<std::size_t>(replicas));
    std::int64_t he = 0, hc = 0;
    auto below = [&](const Eigen::VectorXd& field) {
        for (const auto& a : omega) {
            double s = 0.0;
            for (int i : a) s += field(i);
            if (s > lambda) return false;
        }
        return true;  // max over an empty family is -infinity
    };
    for (std::int64_t k = 0; k < replicas; ++k) {
        for (int i = 0; i < V; ++i) z(i) = rng.normal();
        const bool be = below(f.fx * z), bc = below(f.fy * z);
        he += be;
        hc += bc;
        d[static_cast<std::size_t>(k)] = static_cast<double>(bc) - static_cast<double>(be);
    }
    const auto ms = mean_se(d);
    v.stat_x = static_cast<double>(he) / static_cast<double>(replicas);  // P(max eta-sum <= lambda)
    v.stat_y = static_cast<double>(hc) / static_cast<double>(replicas);  // P(max chi-sum <= lambda)
    v.statistic = ms.mean;
    v.se = ms.se;
    v.pass = v.statistic >= -3.0 * v.se;
    return v;
}

namespace {
Eigen::MatrixXd random_correlation(int n, RngStream& rng) {
    Eigen::MatrixXd a(n, n + 2);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
    // A positive shift in each row makes correlations mostly positive but not all.
    for (int i = 0; i < n; ++i) a.row(i).array() += 0.5 * rng.uniform();
    Eigen::MatrixXd c = a * a.transpose();
    const Eigen::VectorXd d = c.diagonal().cwiseSqrt().cwiseInverse();
    c = d.asDiagonal() * c * d.asDiagonal();
    c.diagonal().setOnes();
    return c;
}
}  // namespace

ComparisonInstance random_slepian_instance(int n, RngStream& rng) {
    const Eigen::MatrixXd ry = random_correlation(n, rng);
    const double t = 0.05 + 0.85 * rng.uniform();
    Eigen::MatrixXd rx = (1.0 - t) * ry + t * Eigen::MatrixXd::Ones(n, n);
    rx.diagonal().setOnes();
    Eigen::VectorXd s(n);
    for (int i = 0; i < n; ++i) s(i) = 0.5 + rng.uniform();
    ComparisonInstance inst;
    inst.x = s.asDiagonal() * rx * s.asDiagonal();
    inst.y = s.asDiagonal() * ry * s.asDiagonal();
    // Exact symmetry and equal diagonals.
    inst.x = 0.5 * (inst.x + inst.x.transpose()).eval();
    inst.y = 0.5 * (inst.y + inst.y.transpose()).eval();
    inst.x.diagonal() = inst.y.diagonal();
    return inst;
}

ComparisonInstance random_sf_instance(int n, RngStream& rng) {
    auto gram = [&] {
        Eigen::MatrixXd a(n, n);
        for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
        const double scale = 0.3 + rng.uniform();
        Eigen::MatrixXd c = scale * a * a.transpose() / n;
        return Eigen::MatrixXd(0.5 * (c + c.transpose()));
    };
    ComparisonInstance inst;
    inst.x = gram();
    inst.y = gram();
    return inst;
}

std::vector<PerturbationPoint> perturbation_shift_experiment(const FieldDraw& reference, const FieldDraw& base, int N,
                                                             const std::vector<PerturbationSpec>& grid,
                                                             std::int64_t replicas, std::uint64_t seed, int workers) {
    for (const auto& s : grid) {
        if (s.r1 < 1 || s.r2 < 1 || N % s.r1 != 0 || N % s.r2 != 0) throw ConfigError("perturbation: blocks must divide N");
        if (s.s1 < 0 || s.s2 < 0) throw ConfigError("perturbation: s must be non-negative");
    }
    const std::size_t G = grid.size();
    std::vector<double> ref(static_cast<std::size_t>(replicas));
    std::vector<std::vector<double>> pert(G, std::vector<double>(static_cast<std::size_t>(replicas)));
    parallel_for(replicas, workers, [&](std::int64_t r) {
        std::vector<double> f;
        reference(static_cast<std::uint64_t>(r), f);
        ref[static_cast<std::size_t>(r)] = *std::max_element(f.begin(), f.end());
        base(static_cast<std::uint64_t>(r), f);
        for (std::size_t gi = 0; gi < G; ++gi) {
            const auto& s = grid[gi];
            const int big = N / s.r2;
            const int n1 = N / s.r1, n2 = N / big;
            // Same perturbation stream for every grid point.
            RngStream rng(seed, static_cast<std::uint64_t>(r), Component::Perturbation);
            std::vector<double> g1(static_cast<std::size_t>(n1) * n1), g2(static_cast<std::size_t>(n2) * n2);
            for (double& x : g1) x = rng.normal();
            for (double& x : g2) x = rng.normal();
            double mx = -INFINITY;
            for (int y = 0; y < N; ++y)
                for (int x = 0; x < N; ++x) {
                    const double v = f[static_cast<std::size_t>(y) * N + x] +
                                     s.s1 * g1[static_cast<std::size_t>(y / s.r1) * n1 + x / s.r1] +
                                     s.s2 * g2[static_cast<std::size_t>(y / big) * n2 + x / big];
                    mx = std::max(mx, v);
                }
            pert[gi][static_cast<std::size_t>(r)] = mx - s.norm2();
        }
    });
    std::vector<PerturbationPoint> out;
    for (std::size_t gi = 0; gi < G; ++gi) {
        PerturbationPoint p;
        p.spec = grid[gi];
        p.ks = dist_distance(pert[gi], ref, Metric::KS);
        p.lp = dist_distance(pert[gi], ref, Metric::LevyProkhorov);
        out.push_back(p);
    }
    return out;
}

std::vector<TailPerturbationPoint> tail_perturbation_experiment(const FieldDraw& base, int N,
                                                                const std::vector<double>& epsilons,
                                                                const std::vector<double>& x_grid,
                                                                std::int64_t replicas, std::uint64_t seed,
                                                                int workers, const NoiseDraw& noise,
                                                                std::int64_t min_hits) {
    const double m = m_N(N);
    const std::size_t E = epsilons.size(), X = x_grid.size();
    // Per replica: max(psi + eps g) per eps and max psi.
    std::vector<std::vector<double>> pert(E, std::vector<double>(static_cast<std::size_t>(replicas)));
    std::vector<double> plain(static_cast<std::size_t>(replicas));
    const NoiseDraw g = noise ? noise : NoiseDraw([](RngStream& r) { return r.normal() / std::sqrt(2.0); });
    parallel_for(replicas, workers, [&](std::int64_t r) {
        std::vector<double> f;
        base(static_cast<std::uint64_t>(r), f);
        RngStream rng(seed, static_cast<std::uint64_t>(r), Component::TailNoise);
        std::vector<double> gv(f.size());
        for (double& x : gv) x = g(rng);
        plain[static_cast<std::size_t>(r)] = *std::max_element(f.begin(), f.end());
        for (std::size_t e = 0; e < E; ++e) {
            double mx = -INFINITY;
            for (std::size_t i = 0; i < f.size(); ++i) mx = std::max(mx, f[i] + epsilons[e] * gv[i]);
            pert[e][static_cast<std::size_t>(r)] = mx;
        }
    });
    std::vector<TailPerturbationPoint> out;
    for (std::size_t e = 0; e < E; ++e) {
        TailPerturbationPoint p;
        p.epsilon = epsilons[e];
        p.x = x_grid;
        std::int64_t num = 0, den = 0;
        for (std::size_t xi = 0; xi < X; ++xi) {
            const double hi = m + x_grid[xi], lo = hi - std::sqrt(epsilons[e]);
            const auto a = std::count_if(pert[e].begin(), pert[e].end(), [&](double v) { return v >= hi; });
            const auto b = std::count_if(plain.begin(), plain.end(), [&](double v) { return v >= lo; });
            p.p_perturbed.push_back(static_cast<double>(a) / static_cast<double>(replicas));
            p.p_shifted.push_back(static_cast<double>(b) / static_cast<double>(replicas));
            if (b >= min_hits) {
                num += a;
                den += b;
            }
        }
        p.factor = den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
        out.push_back(p);
    }
    return out;
}

}  // namespace lcgf
