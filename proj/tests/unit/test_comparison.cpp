#include <doctest.h>

#include <cmath>
#include <set>

#include <boost/math/constants/constants.hpp>

#include "lcgf/comparison.hpp"
#include "lcgf/errors.hpp"
#include "lcgf/mvn.hpp"
#include "lcgf/rng.hpp"

using namespace lcgf;

namespace {
constexpr double kPi = boost::math::constants::pi<double>();

Eigen::MatrixXd corr2(double rho) {
    Eigen::MatrixXd c(2, 2);
    c << 1, rho, rho, 1;
    return c;
}

// Monte Carlo P(X <= b) via a Cholesky factor.
std::pair<double, double> mc_orthant(const Eigen::MatrixXd& c, const Eigen::VectorXd& b, int reps, std::uint64_t seed) {
    const Eigen::MatrixXd l = c.llt().matrixL();
    RngStream rng(seed, 0, Component::Field);
    Eigen::VectorXd z(c.rows());
    int hits = 0;
    for (int r = 0; r < reps; ++r) {
        for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
        hits += ((l * z).array() <= b.array()).all();
    }
    const double p = static_cast<double>(hits) / reps;
    return {p, std::sqrt(p * (1 - p) / reps)};
}
}  // namespace

TEST_CASE("bivariate orthant at zero") {
    for (double rho : {-0.9, -0.3, 0.0, 0.4, 0.95}) {
        const double want = 0.25 + std::asin(rho) / (2 * kPi);
        CHECK(orthant_cdf(corr2(rho), Eigen::VectorXd::Zero(2)) == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("trivariate orthant at zero") {
    Eigen::MatrixXd c(3, 3);
    c << 1, 0.3, -0.2, 0.3, 1, 0.5, -0.2, 0.5, 1;
    const double want = 0.125 + (std::asin(0.3) + std::asin(-0.2) + std::asin(0.5)) / (4 * kPi);
    CHECK(orthant_cdf(c, Eigen::VectorXd::Zero(3)) == doctest::Approx(want).epsilon(1e-9));
    // Scaling rows and thresholds together leaves the value unchanged.
    const Eigen::Vector3d s(2.0, 0.5, 1.5);
    const Eigen::MatrixXd cs = s.asDiagonal() * c * s.asDiagonal();
    CHECK(orthant_cdf(cs, Eigen::VectorXd::Zero(3)) == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("orthant independence and size guard") {
    const Eigen::Vector2d b(0.5, -0.3);
    const double p = 0.5 * std::erfc(-0.5 / std::sqrt(2.0)) * 0.5 * std::erfc(0.3 / std::sqrt(2.0));
    CHECK(orthant_cdf(Eigen::MatrixXd::Identity(2, 2), b) == doctest::Approx(p).epsilon(1e-12));
    CHECK_THROWS_AS(orthant_cdf(Eigen::MatrixXd::Identity(4, 4), Eigen::VectorXd::Zero(4)), SizeError);
}

TEST_CASE("exact orthant values agree with Monte Carlo") {
    RngStream rng(101, 0, Component::Instance);
    for (int k = 0; k < 20; ++k) {
        const int n = 2 + k % 2;
        const auto inst = random_sf_instance(n, rng);
        Eigen::MatrixXd c = inst.x + 0.05 * Eigen::MatrixXd::Identity(n, n);
        Eigen::VectorXd b(n);
        for (int i = 0; i < n; ++i) b(i) = 2.0 * rng.uniform() - 1.0;
        const double exact = orthant_cdf(c, b);
        const auto [p, se] = mc_orthant(c, b, 40000, 200 + static_cast<std::uint64_t>(k));
        CHECK(std::abs(exact - p) <= 4.5 * se + 1e-4);
    }
}

TEST_CASE("hypothesis report") {
    ComparisonInstance inst{corr2(0.8), corr2(0.2)};
    const auto h = inst.hypotheses();
    CHECK(h.equal_variances);
    CHECK(h.x_dominates_y);
    CHECK(h.x_increments_below);
    CHECK(h.gamma == doctest::Approx(1.2));
    ComparisonInstance bad{corr2(0.2), corr2(0.8)};
    const auto hb = bad.hypotheses();
    CHECK_FALSE(hb.x_dominates_y);
    CHECK(hb.violating_i == 0);
    CHECK(hb.violating_j == 1);
    CHECK_THROWS_AS(slepian_check(bad, 0.5, 1000, 1), PreconditionError);
    ComparisonInstance unequal{2.0 * corr2(0.8), corr2(0.2)};
    CHECK_THROWS_AS(slepian_check(unequal, 0.5, 1000, 1), PreconditionError);
    CHECK(inst.hash() != bad.hash());
    CHECK(inst.hash().size() == 64);
}

TEST_CASE("slepian on two points is exact") {
    ComparisonInstance inst{corr2(0.8), corr2(0.2)};
    for (double x : {-1.0, 0.0, 1.5}) {
        const auto v = slepian_check(inst, x, 1000, 3);
        CHECK(v.exact);
        CHECK(v.pass);
        CHECK(v.stat_x <= v.stat_y);
    }
    const auto same = slepian_check({corr2(0.5), corr2(0.5)}, 0.3, 1000, 3);
    CHECK(same.statistic == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(same.pass);
}

TEST_CASE("slepian on random instances") {
    RngStream rng(102, 0, Component::Instance);
    for (int k = 0; k < 10; ++k) {
        const int n = 2 + k;  // exact for n <= 3, paired Monte Carlo above
        const auto inst = random_slepian_instance(n, rng);
        const auto v = slepian_check(inst, 2.0 * rng.uniform(), 20000, 300 + static_cast<std::uint64_t>(k));
        CHECK(v.hypotheses.x_dominates_y);
        CHECK(v.pass);
        CHECK(v.exact == (n <= 3));
    }
}

TEST_CASE("sudakov-fernique: iid against comonotone") {
    ComparisonInstance inst{Eigen::MatrixXd::Identity(4, 4), Eigen::MatrixXd::Ones(4, 4)};
    const auto v = sudakov_fernique_check(inst, 200000, 5);
    CHECK(v.stat_x == doctest::Approx(1.029375).epsilon(0.01));
    CHECK(std::abs(v.stat_y) < 0.01);  // E max = E Z = 0
    CHECK(v.bound == doctest::Approx(std::sqrt(2.0 * std::log(4.0))));
    CHECK(v.pass);
}

TEST_CASE("sudakov-fernique on random instances") {
    RngStream rng(103, 0, Component::Instance);
    for (int k = 0; k < 10; ++k) {
        const auto inst = random_sf_instance(3 + k, rng);
        CHECK(sudakov_fernique_check(inst, 5000, 400 + static_cast<std::uint64_t>(k)).pass);
    }
    ComparisonInstance same{Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd::Identity(3, 3)};
    const auto v = sudakov_fernique_check(same, 1000, 6);
    CHECK(v.statistic == doctest::Approx(0.0));
    CHECK(v.pass);
}

TEST_CASE("omega enumeration against a naive pair oracle") {
    for (int N : {4, 5, 6}) {
        for (double r : {1.0, 1.5, 2.0}) {
            auto ok = [&](int a, int b) {
                const double d = std::hypot(a % N - b % N, a / N - b / N);
                return d >= r - 1e-12 && d <= N / r + 1e-12;
            };
            std::set<std::vector<int>> want2, want3;
            const int V = N * N;
            for (int a = 0; a < V; ++a)
                for (int b = 0; b < V; ++b) {
                    if (a == b || !ok(a, b)) continue;
                    want2.insert({std::min(a, b), std::max(a, b)});
                    for (int c = 0; c < V; ++c) {
                        if (c == a || c == b || !ok(a, c) || !ok(b, c)) continue;
                        std::vector<int> t{a, b, c};
                        std::sort(t.begin(), t.end());
                        want3.insert(t);
                    }
                }
            const auto o2 = enumerate_omega(N, 2, r);
            const auto o3 = enumerate_omega(N, 3, r);
            CHECK(std::set<std::vector<int>>(o2.begin(), o2.end()) == want2);
            CHECK(std::set<std::vector<int>>(o3.begin(), o3.end()) == want3);
            CHECK(o2.size() == want2.size());
        }
    }
    CHECK(enumerate_omega(4, 2, 3.0).empty());  // N / r < r
    CHECK_THROWS_AS(enumerate_omega(9, 2, 1.0), SizeError);
}

TEST_CASE("slepian for sums over separated tuples") {
    const int N = 4, V = N * N;
    const Eigen::MatrixXd eta = Eigen::MatrixXd::Identity(V, V);
    const Eigen::MatrixXd chi = 0.5 * Eigen::MatrixXd::Identity(V, V) + 0.5 * Eigen::MatrixXd::Ones(V, V);
    const auto v = sum_slepian_check(eta, chi, N, 2, 1.0, 2.0, 20000, 7);
    CHECK(v.pass);
    CHECK(v.stat_x <= v.stat_y);
    CHECK_THROWS_AS(sum_slepian_check(chi, eta, N, 2, 1.0, 2.0, 1000, 7), PreconditionError);
    // Empty family: both probabilities are one.
    const auto e = sum_slepian_check(eta, chi, N, 2, 3.0, 0.0, 100, 7);
    CHECK(e.stat_x == 1.0);
    CHECK(e.stat_y == 1.0);
}

TEST_CASE("perturbation experiment with a zero perturbation") {
    const int N = 8;
    FieldDraw draw = [&](std::uint64_t r, std::vector<double>& f) {
        RngStream rng(9, r, Component::Field);
        f.resize(N * N);
        for (double& x : f) x = rng.normal();
    };
    const auto pts = perturbation_shift_experiment(draw, draw, N, {{0.0, 0.0, 2, 2}, {1.0, 1.0, 2, 2}}, 400, 10, 2);
    REQUIRE(pts.size() == 2);
    CHECK(pts[0].ks == doctest::Approx(0.0));
    CHECK(pts[0].lp == doctest::Approx(0.0));
    CHECK(pts[1].ks > 0.0);
    CHECK_THROWS_AS(perturbation_shift_experiment(draw, draw, N, {{0.5, 0.5, 3, 2}}, 10, 10, 1), ConfigError);
}

TEST_CASE("tail perturbation factor is one at zero noise") {
    const int N = 8;
    FieldDraw draw = [&](std::uint64_t r, std::vector<double>& f) {
        RngStream rng(11, r, Component::Field);
        f.resize(N * N);
        for (double& x : f) x = rng.normal();
    };
    const auto pts = tail_perturbation_experiment(draw, N, {0.0}, {-3.0, -2.5}, 500, 12, 1);
    REQUIRE(pts.size() == 1);
    CHECK(pts[0].factor == doctest::Approx(1.0));
    CHECK(pts[0].p_perturbed == pts[0].p_shifted);
}

TEST_CASE("verdict json") {
    ComparisonInstance inst{corr2(0.8), corr2(0.2)};
    const auto j = slepian_check(inst, 0.0, 100, 1).to_json();
    CHECK(j.find("\"verdict\":\"pass\"") != std::string::npos);
    CHECK(j.find(inst.hash()) != std::string::npos);
}
