#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "lcgf/brw_cov.hpp"
#include "lcgf/errors.hpp"
#include "lcgf/green.hpp"
#include "lcgf/psi.hpp"

using namespace lcgf;

namespace {
constexpr double kHalfPi = 1.5707963267948966;

// Exit law from a dense solve of the harmonic extension, one boundary site at
// a time. Independent of the sine expansion.
std::map<std::pair<int, int>, double> exit_oracle(const Rect& box, Vertex v) {
    const Rect in = box.interior();
    const int a = in.width(), b = in.height();
    auto id = [&](int x, int y) { return (y - in.y0) * a + (x - in.x0); };
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(a * b, a * b);
    for (int y = in.y0; y <= in.y1; ++y)
        for (int x = in.x0; x <= in.x1; ++x)
            for (auto [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}})
                if (in.contains({x + dx, y + dy})) m(id(x, y), id(x + dx, y + dy)) -= 0.25;
    const auto lu = m.partialPivLu();
    std::map<std::pair<int, int>, double> out;
    for (int y = box.y0; y <= box.y1; ++y)
        for (int x = box.x0; x <= box.x1; ++x) {
            if (in.contains({x, y})) continue;
            Eigen::VectorXd r = Eigen::VectorXd::Zero(a * b);
            for (auto [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}})
                if (in.contains({x + dx, y + dy})) r(id(x + dx, y + dy)) += 0.25;
            out[{x, y}] = lu.solve(r)(id(v.x, v.y));
        }
    return out;
}
}  // namespace

TEST_CASE("Green function hand oracles") {
    const auto g3 = green_matrix(3);
    CHECK(std::abs(g3.m(4, 4) - kHalfPi) < 1e-12);
    CHECK(g3.m.cwiseAbs().sum() == doctest::Approx(kHalfPi));
    const auto g4 = green_matrix(4);
    // 2x2 interior: visits solve v = 1 + v/2 * (1/2) ... giving 7/6 on the diagonal.
    for (int idx : {5, 6, 9, 10}) CHECK(std::abs(g4.m(idx, idx) - kHalfPi * 7.0 / 6.0) < 1e-12);
    CHECK(std::abs(g4.m(5, 6) - kHalfPi * 1.0 / 3.0) < 1e-12);
    CHECK(std::abs(g4.m(5, 10) - kHalfPi * 1.0 / 6.0) < 1e-12);
    CHECK(g4.m.row(0).cwiseAbs().sum() == 0.0);
    CHECK_THROWS_AS(green_matrix(128), SizeError);
    CHECK_THROWS_AS(green_matrix(2), DomainError);
}

TEST_CASE("sine expansion agrees with the absorbing-chain solve") {
    for (int N : {3, 4, 5, 8, 16}) {
        const auto a = green_matrix(N);
        const auto b = green_matrix_linear_solve(N);
        CHECK((a.m - b.m).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(a.is_symmetric());
        CHECK(a.is_psd());
    }
    const RectGreen g(7, 4);
    const auto d = g.dense();
    const auto diag = g.diagonal();
    const auto row = g.row(3, 2);
    for (int p = 0; p < 28; ++p) {
        CHECK(diag[p] == doctest::Approx(d(p, p)).epsilon(1e-13));
        CHECK(row[p] == doctest::Approx(d(1 * 7 + 2, p)).epsilon(1e-13));
    }
    CHECK(g(3, 2, 5, 4) == doctest::Approx(d(1 * 7 + 2, 3 * 7 + 4)).epsilon(1e-13));
}

TEST_CASE("Green matrix against simulated walk visits on V_4") {
    std::mt19937_64 rng(12345);
    std::uniform_int_distribution<int> step(0, 3);
    const int trials = 1000000;
    double s1 = 0, s2 = 0;  // visits to (2,2) from (1,1)
    double t1 = 0, t2 = 0;  // visits to (1,1) from (1,1)
    for (int t = 0; t < trials; ++t) {
        int x = 1, y = 1, v22 = 0, v11 = 0;
        while (x >= 1 && x <= 2 && y >= 1 && y <= 2) {
            v22 += (x == 2 && y == 2);
            v11 += (x == 1 && y == 1);
            switch (step(rng)) {
                case 0: ++x; break;
                case 1: --x; break;
                case 2: ++y; break;
                default: --y;
            }
        }
        s1 += v22; s2 += double(v22) * v22;
        t1 += v11; t2 += double(v11) * v11;
    }
    const auto g = green_matrix(4);
    auto check = [&](double sum, double sq, double exact) {
        const double mean = sum / trials;
        const double se = std::sqrt((sq / trials - mean * mean) / trials);
        CHECK(std::abs(kHalfPi * mean - exact) < 3 * kHalfPi * se);
    };
    check(s1, s2, g.m(5, 10));
    check(t1, t2, g.m(5, 5));
}

TEST_CASE("harmonic kernels") {
    SUBCASE("3x3 box centre: one step to the four neighbours") {
        const auto k = harmonic_kernel({0, 2, 0, 2}, {1, 1});
        CHECK(k.weights.size() == 4);  // corners are never hit
        for (const auto& [z, w] : k.weights) {
            const bool edge = std::abs(z.x - 1) + std::abs(z.y - 1) == 1;
            CHECK(w == doctest::Approx(edge ? 0.25 : 0.0));
        }
    }
    SUBCASE("box = {v} is a point mass") {
        const auto k = harmonic_kernel({5, 5, 7, 7}, {5, 7});
        REQUIRE(k.weights.size() == 1);
        CHECK(k.weights[0].first == Vertex{5, 7});
        CHECK(k.weights[0].second == 1.0);
    }
    SUBCASE("random boxes: stochastic and equal to the dense harmonic solve") {
        std::mt19937_64 rng(7);
        for (int t = 0; t < 100; ++t) {
            const int w = 3 + int(rng() % 9), h = 3 + int(rng() % 9);
            const int x0 = int(rng() % 5), y0 = int(rng() % 5);
            const Rect box{x0, x0 + w - 1, y0, y0 + h - 1};
            const Vertex v{x0 + 1 + int(rng() % (w - 2)), y0 + 1 + int(rng() % (h - 2))};
            const auto k = harmonic_kernel(box, v);
            CHECK(std::abs(k.total() - 1.0) < 1e-12);
            if (t < 20) {
                const auto o = exit_oracle(box, v);
                for (const auto& [z, wt] : k.weights) {
                    CHECK(wt >= -1e-14);
                    CHECK(std::abs(wt - o.at({z.x, z.y})) < 1e-12);
                }
            }
        }
    }
}

TEST_CASE("psi functional: sigma = 1 reduces to the DGFF") {
    for (int n : {3, 4, 5}) {
        const BoxSpec spec(n);
        const auto A = psi_functional_matrix(spec, VarianceProfile::constant());
        for (std::int64_t i = 0; i < spec.volume(); ++i) {
            const double want = spec.is_interior(spec.vertex(i)) ? 1.0 : 0.0;
            for (std::int64_t j = 0; j < spec.volume(); ++j) {
                REQUIRE(std::abs(A.A(i, j) - (i == j ? want : 0.0)) < 1e-12);
            }
        }
        const auto g = green_matrix(spec);
        const Eigen::MatrixXd c = A.A * g.m * A.A.transpose();
        CHECK((c - g.m).cwiseAbs().maxCoeff() < 1e-9);
    }
    CHECK_THROWS_AS(psi_functional_matrix(BoxSpec(7), VarianceProfile::constant()), SizeError);
}

TEST_CASE("psi: martingale variance equals diag(A G A^T); covariance is PSD") {
    const auto prof = VarianceProfile::step({0.0, 0.3, 0.6, 1.0}, {0.6, 0.9, 1.3}).normalized();
    for (const auto& p : {VarianceProfile::two_speed(), prof}) {
        for (int n : {4, 5}) {
            const BoxSpec spec(n);
            const PsiOperator op(spec, p);
            const auto A = psi_functional_matrix(spec, p);
            const auto g = green_matrix(spec);
            const Eigen::MatrixXd c = A.A * g.m * A.A.transpose();
            for (std::int64_t i = 0; i < spec.volume(); ++i) {
                CHECK(op.variance(spec.vertex(i)) == doctest::Approx(c(i, i)).epsilon(1e-10));
            }
            CovarianceMatrix cm{g.index, c};
            CHECK(cm.is_psd());
            // Sparse routes agree with the dense product.
            std::vector<Vertex> vs{{3, 3}, {5, 7}, {1, 1}, {8, 2}};
            const auto sub = psi_covariance(op, g, vs);
            const auto row = psi_covariance_row(op, vs[0], vs);
            for (std::size_t i = 0; i < vs.size(); ++i) {
                for (std::size_t j = 0; j < vs.size(); ++j) {
                    CHECK(sub.m(i, j) == doctest::Approx(c(spec.index(vs[i]), spec.index(vs[j]))).epsilon(1e-10));
                }
                CHECK(row[i] == doctest::Approx(sub.m(0, i)).epsilon(1e-10));
            }
            std::vector<double> phi(spec.volume()), psi;
            std::mt19937_64 rng(3);
            std::normal_distribution<double> nd;
            for (std::int64_t i = 0; i < spec.volume(); ++i)
                phi[i] = spec.is_interior(spec.vertex(i)) ? nd(rng) : 0.0;
            op.apply(phi, psi);
            const Eigen::VectorXd ref = A.A * Eigen::Map<Eigen::VectorXd>(phi.data(), phi.size());
            for (std::int64_t i = 0; i < spec.volume(); ++i) CHECK(psi[i] == doctest::Approx(ref(i)).epsilon(1e-12));
        }
    }
}

namespace {
// Explicit box enumeration: dyadic boxes for the IBRW, all 2^{2k} periodized
// squares for the MIBRW.
double ibrw_enum(const std::vector<double>& w, int N, Vertex u, Vertex v) {
    double s = 0;
    for (int k = 0; k < int(w.size()); ++k) {
        const int side = 1 << k;
        for (int bx = 0; bx < N; bx += side)
            for (int by = 0; by < N; by += side) {
                const Rect r{bx, bx + side - 1, by, by + side - 1};
                if (r.contains(u) && r.contains(v)) s += w[k] * w[k];
            }
    }
    return s;
}
double mibrw_enum(const std::vector<double>& w, int N, Vertex u, Vertex v) {
    double s = 0;
    for (int k = 0; k < int(w.size()); ++k) {
        const int side = 1 << k;
        auto in = [&](int x0, int y0, Vertex p) {
            return ((p.x - x0) % N + N) % N < side && ((p.y - y0) % N + N) % N < side;
        };
        int both = 0, cu = 0;
        for (int x0 = 0; x0 < N; ++x0)
            for (int y0 = 0; y0 < N; ++y0) {
                both += in(x0, y0, u) && in(x0, y0, v);
                cu += in(x0, y0, u);
            }
        CHECK(cu == side * side);
        s += w[k] * w[k] * both / double(side * side);
    }
    return s;
}
}  // namespace

TEST_CASE("branching random walk covariances") {
    const auto one = VarianceProfile::constant();
    const auto two = VarianceProfile::two_speed();
    for (int n : {1, 2, 3, 4}) {
        const int N = 1 << n;
        CHECK(ibrw_cov(one, n, {0, 0}, {0, 0}) == doctest::Approx(n * std::log(2.0)));
        CHECK(mibrw_cov(one, n, {1 % N, 0}, {1 % N, 0}) == doctest::Approx(n * std::log(2.0)));
        // Level cells align with the breakpoint 1/2 only for even n.
        if (n % 2 == 0) CHECK(ibrw_cov(two, n, {0, 0}, {0, 0}) == doctest::Approx(n * std::log(2.0)));
        CHECK(ibrw_cov(two, n, {0, 0}, {0, 0}) == doctest::Approx(mibrw_cov(two, n, {0, 0}, {0, 0})));
        for (const auto* p : {&one, &two}) {
            const auto w = level_weights(*p, n);
            for (int a = 0; a < N * N; a += 1 + (N > 8 ? 5 : 0))
                for (int b = 0; b < N * N; b += 1 + (N > 8 ? 7 : 0)) {
                    const Vertex u{a % N, a / N}, v{b % N, b / N};
                    CHECK(ibrw_cov(w, u, v) == doctest::Approx(ibrw_enum(w, N, u, v)).epsilon(1e-13));
                    CHECK(mibrw_cov(w, N, u, v) == doctest::Approx(mibrw_enum(w, N, u, v)).epsilon(1e-13));
                }
        }
    }
    // Different top-level quadrants share nothing.
    CHECK(ibrw_cov(two, 3, {0, 0}, {4, 0}) == 0.0);
    CHECK(ibrw_cov(two, 3, {0, 0}, {3, 3}) == doctest::Approx(level_weights(two, 3)[2] * level_weights(two, 3)[2]));
}

TEST_CASE("MIBRW covariance is non-increasing along axis rays") {
    const auto p = VarianceProfile::two_speed();
    const int n = 4, N = 16;
    const auto w = level_weights(p, n);
    for (int ux = 0; ux < N; ++ux)
        for (int uy = 0; uy < N; ++uy)
            for (int dir = 0; dir < 4; ++dir) {
                double prev = mibrw_cov(w, N, {ux, uy}, {ux, uy});
                for (int t = 1; t <= N / 2; ++t) {
                    const int dx = dir == 0 ? t : dir == 1 ? -t : 0;
                    const int dy = dir == 2 ? t : dir == 3 ? -t : 0;
                    const Vertex v{((ux + dx) % N + N) % N, ((uy + dy) % N + N) % N};
                    const double c = mibrw_cov(w, N, {ux, uy}, v);
                    CHECK(c <= prev + 1e-15);
                    prev = c;
                }
            }
}
