#include "lcgf/green.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "lcgf/errors.hpp"

namespace lcgf {

namespace {
constexpr double kHalfPi = 1.57079632679489661923;

void fill_sine_table(int a, std::vector<double>& s, std::vector<double>& c) {
    s.assign(static_cast<std::size_t>(a) * a, 0.0);
    c.assign(a, 0.0);
    const double norm = std::sqrt(2.0 / (a + 1));
    const double step = M_PI / (a + 1);
    for (int j = 0; j < a; ++j) {
        c[j] = std::cos((j + 1) * step);
        for (int x = 0; x < a; ++x) {
            // Reduce the argument before sin() to keep large tables accurate.
            const long m = static_cast<long>(j + 1) * (x + 1) % (2 * (a + 1));
            s[static_cast<std::size_t>(j) * a + x] = norm * std::sin(m * step);
        }
    }
}
}  // namespace

bool CovarianceMatrix::is_symmetric(double tol) const {
    return m.rows() == m.cols() && (m - m.transpose()).cwiseAbs().maxCoeff() <= tol;
}

bool CovarianceMatrix::is_psd() const {
    if (m.rows() == 0) return true;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    const double floor = -1e-8 * std::max(m.trace(), 0.0) / static_cast<double>(m.rows());
    return es.eigenvalues().minCoeff() >= floor;
}

RectGreen::RectGreen(int a, int b) : a_(a), b_(b) {
    if (a < 1 || b < 1) throw DomainError("RectGreen needs a, b >= 1");
    fill_sine_table(a, sx_, cx_);
    fill_sine_table(b, sy_, cy_);
}

double RectGreen::operator()(int px, int py, int qx, int qy) const {
    double total = 0.0;
    for (int j = 0; j < a_; ++j) {
        const double fx = sx_[j * a_ + px - 1] * sx_[j * a_ + qx - 1];
        if (fx == 0.0) continue;
        double inner = 0.0;
        for (int k = 0; k < b_; ++k) inner += sy_[k * b_ + py - 1] * sy_[k * b_ + qy - 1] / mu(j, k);
        total += fx * inner;
    }
    return kHalfPi * total;
}

std::vector<double> RectGreen::row(int px, int py) const {
    std::vector<double> c(static_cast<std::size_t>(a_) * b_);  // c[j * b + qy]
    for (int j = 0; j < a_; ++j) {
        for (int qy = 0; qy < b_; ++qy) {
            double s = 0.0;
            for (int k = 0; k < b_; ++k) s += sy_[k * b_ + py - 1] * sy_[k * b_ + qy] / mu(j, k);
            c[static_cast<std::size_t>(j) * b_ + qy] = s;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(a_) * b_, 0.0);
    for (int j = 0; j < a_; ++j) {
        const double fp = sx_[j * a_ + px - 1];
        for (int qy = 0; qy < b_; ++qy) {
            const double f = kHalfPi * fp * c[static_cast<std::size_t>(j) * b_ + qy];
            double* dst = &out[static_cast<std::size_t>(qy) * a_];
            const double* sj = &sx_[static_cast<std::size_t>(j) * a_];
            for (int qx = 0; qx < a_; ++qx) dst[qx] += f * sj[qx];
        }
    }
    return out;
}

std::vector<double> RectGreen::diagonal() const {
    std::vector<double> t(static_cast<std::size_t>(a_) * b_);  // t[j * b + y]
    for (int j = 0; j < a_; ++j) {
        for (int y = 0; y < b_; ++y) {
            double s = 0.0;
            for (int k = 0; k < b_; ++k) {
                const double v = sy_[k * b_ + y];
                s += v * v / mu(j, k);
            }
            t[static_cast<std::size_t>(j) * b_ + y] = s;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(a_) * b_, 0.0);
    for (int y = 0; y < b_; ++y) {
        for (int x = 0; x < a_; ++x) {
            double s = 0.0;
            for (int j = 0; j < a_; ++j) {
                const double v = sx_[j * a_ + x];
                s += v * v * t[static_cast<std::size_t>(j) * b_ + y];
            }
            out[static_cast<std::size_t>(y) * a_ + x] = kHalfPi * s;
        }
    }
    return out;
}

Eigen::MatrixXd RectGreen::dense() const {
    const int n = a_ * b_;
    Eigen::MatrixXd g(n, n);
    Eigen::MatrixXd phi(a_, a_);
    for (int x = 0; x < a_; ++x) {
        for (int j = 0; j < a_; ++j) phi(x, j) = sx_[j * a_ + x];
    }
    Eigen::VectorXd c(a_);
    for (int yp = 0; yp < b_; ++yp) {
        for (int yq = yp; yq < b_; ++yq) {
            for (int j = 0; j < a_; ++j) {
                double s = 0.0;
                for (int k = 0; k < b_; ++k) s += sy_[k * b_ + yp] * sy_[k * b_ + yq] / mu(j, k);
                c(j) = kHalfPi * s;
            }
            const Eigen::MatrixXd block = phi * c.asDiagonal() * phi.transpose();
            g.block(yp * a_, yq * a_, a_, a_) = block;
            if (yq != yp) g.block(yq * a_, yp * a_, a_, a_) = block.transpose();
        }
    }
    return g;
}

std::vector<RectGreen::RingWeight> RectGreen::exit_distribution(int px, int py) const {
    std::vector<RingWeight> out;
    out.reserve(2 * (a_ + b_));
    std::vector<double> u(std::max(a_, b_));
    // Horizontal sides: walk leaves through (x, 0) from (x, 1), or (x, b+1) from (x, b).
    for (int side = 0; side < 2; ++side) {
        const int edge = side == 0 ? 0 : b_ - 1;
        for (int j = 0; j < a_; ++j) {
            double s = 0.0;
            for (int k = 0; k < b_; ++k) s += sy_[k * b_ + py - 1] * sy_[k * b_ + edge] / mu(j, k);
            u[j] = s * sx_[j * a_ + px - 1];
        }
        for (int x = 0; x < a_; ++x) {
            double w = 0.0;
            for (int j = 0; j < a_; ++j) w += u[j] * sx_[j * a_ + x];
            out.push_back({x + 1, side == 0 ? 0 : b_ + 1, 0.25 * w});
        }
    }
    for (int side = 0; side < 2; ++side) {
        const int edge = side == 0 ? 0 : a_ - 1;
        for (int k = 0; k < b_; ++k) {
            double s = 0.0;
            for (int j = 0; j < a_; ++j) s += sx_[j * a_ + px - 1] * sx_[j * a_ + edge] / mu(j, k);
            u[k] = s * sy_[k * b_ + py - 1];
        }
        for (int y = 0; y < b_; ++y) {
            double w = 0.0;
            for (int k = 0; k < b_; ++k) w += u[k] * sy_[k * b_ + y];
            out.push_back({side == 0 ? 0 : a_ + 1, y + 1, 0.25 * w});
        }
    }
    return out;
}

CovarianceMatrix green_matrix(const BoxSpec& spec, int max_side) {
    return green_matrix(spec.side(), max_side);
}

CovarianceMatrix green_matrix(int N, int max_side) {
    if (N < 3) throw DomainError("green_matrix needs N >= 3");
    if (N > max_side) {
        throw SizeError("green_matrix: N = " + std::to_string(N) + " exceeds the dense limit " +
                        std::to_string(max_side) + "; use the field samplers instead");
    }
    const std::int64_t vol = static_cast<std::int64_t>(N) * N;
    CovarianceMatrix cov;
    cov.index.resize(static_cast<std::size_t>(vol));
    for (std::int64_t i = 0; i < vol; ++i) cov.index[i] = {static_cast<int>(i % N), static_cast<int>(i / N)};
    cov.m = Eigen::MatrixXd::Zero(vol, vol);
    const int a = N - 2;
    const Eigen::MatrixXd g = RectGreen(a, a).dense();
    std::vector<std::int64_t> glob(static_cast<std::size_t>(a) * a);
    for (int y = 0; y < a; ++y) {
        for (int x = 0; x < a; ++x) glob[y * a + x] = static_cast<std::int64_t>(y + 1) * N + x + 1;
    }
    for (int p = 0; p < a * a; ++p) {
        for (int q = 0; q < a * a; ++q) cov.m(glob[p], glob[q]) = g(p, q);
    }
    return cov;
}

CovarianceMatrix green_matrix_linear_solve(int N) {
    if (N < 3) throw DomainError("green_matrix needs N >= 3");
    if (N > 32) throw SizeError("green_matrix_linear_solve is limited to N <= 32");
    const std::int64_t vol = static_cast<std::int64_t>(N) * N;
    auto index = [N](Vertex v) { return static_cast<std::int64_t>(v.y) * N + v.x; };
    std::vector<Vertex> inner;
    std::vector<int> local(static_cast<std::size_t>(vol), -1);
    for (std::int64_t i = 0; i < vol; ++i) {
        const Vertex v{static_cast<int>(i % N), static_cast<int>(i / N)};
        if (v.x >= 1 && v.y >= 1 && v.x <= N - 2 && v.y <= N - 2) {
            local[i] = static_cast<int>(inner.size());
            inner.push_back(v);
        }
    }
    const int m = static_cast<int>(inner.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(m, m);
    const int dx[4] = {1, -1, 0, 0};
    const int dy[4] = {0, 0, 1, -1};
    for (int p = 0; p < m; ++p) {
        for (int d = 0; d < 4; ++d) {
            const Vertex w{inner[p].x + dx[d], inner[p].y + dy[d]};
            const int q = local[index(w)];
            if (q >= 0) a(p, q) -= 0.25;
        }
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    const Eigen::MatrixXd inv = lu.inverse();
    if (!inv.allFinite()) throw NumericError("green_matrix_linear_solve: singular chain");
    CovarianceMatrix cov;
    cov.index.resize(static_cast<std::size_t>(vol));
    for (std::int64_t i = 0; i < vol; ++i) cov.index[i] = {static_cast<int>(i % N), static_cast<int>(i / N)};
    cov.m = Eigen::MatrixXd::Zero(vol, vol);
    for (int p = 0; p < m; ++p) {
        for (int q = 0; q < m; ++q) {
            cov.m(index(inner[p]), index(inner[q])) = kHalfPi * inv(p, q);
        }
    }
    return cov;
}

double HarmonicKernel::total() const {
    double s = 0.0;
    for (const auto& [v, w] : weights) s += w;
    return s;
}

HarmonicKernel harmonic_kernel(const Rect& box, Vertex v) {
    HarmonicKernel k{v, box, {}};
    const Rect in = box.interior();
    if (!in.contains(v)) {
        k.weights.push_back({v, 1.0});
        return k;
    }
    const auto g = rect_green(in.width(), in.height());
    for (const auto& r : g->exit_distribution(v.x - in.x0 + 1, v.y - in.y0 + 1)) {
        k.weights.push_back({{box.x0 + r.x, box.y0 + r.y}, r.w});
    }
    return k;
}

std::shared_ptr<const RectGreen> rect_green(int a, int b) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::shared_ptr<const RectGreen>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{a, b}];
    if (!slot) slot = std::make_shared<const RectGreen>(a, b);
    return slot;
}

}  // namespace lcgf
