#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "lcgf/centering.hpp"
#include "lcgf/errors.hpp"
#include "lcgf/extremes.hpp"
#include "lcgf/rng.hpp"

using namespace lcgf;

namespace {
std::vector<double> gumbel_sample(std::int64_t n, double scale, std::uint64_t seed) {
    RngStream rng(seed, 0, Component::Field);
    std::vector<double> x(static_cast<std::size_t>(n));
    for (double& v : x) v = -scale * std::log(-std::log(std::max(rng.uniform(), 1e-300)));
    return x;
}
}  // namespace

TEST_CASE("wilson interval") {
    // Known value: 8 of 10 at 95%.
    const auto p = wilson(8, 10);
    CHECK(p.p == doctest::Approx(0.8));
    CHECK(p.lo == doctest::Approx(0.4901625).epsilon(1e-6));
    CHECK(p.hi == doctest::Approx(0.9433178).epsilon(1e-6));
    const auto z = wilson(0, 50);
    CHECK(z.lo == doctest::Approx(0.0));
    CHECK(z.hi > 0.0);
    const auto one = wilson(50, 50);
    CHECK(one.hi == doctest::Approx(1.0));
    CHECK(one.lo < 1.0);
}

TEST_CASE("quantile type 7") {
    CHECK(quantile({1, 2, 3, 4}, 0.5) == doctest::Approx(2.5));
    CHECK(quantile({4, 1, 3, 2}, 0.25) == doctest::Approx(1.75));
    CHECK(quantile({5}, 0.9) == doctest::Approx(5.0));
}

TEST_CASE("max_stat and summary") {
    std::vector<double> f = {0.0, 3.0, 1.0, -2.0};
    const auto s = max_stat(f, 2, 1.0, 7);
    CHECK(s.max == 3.0);
    CHECK(s.argmax.x == 1);
    CHECK(s.argmax.y == 0);
    CHECK(s.centered == doctest::Approx(2.0));
    CHECK_THROWS_AS(summarize({}), DomainError);
}

TEST_CASE("tail slope recovers an exponential rate") {
    // Gumbel with scale 1/2 has P(X >= z) ~ e^{-2z} in the upper tail.
    const auto x = gumbel_sample(200000, 0.5, 11);
    const auto t = tail_slope(x, {1.0, 1.5, 2.0, 2.5, 3.0});
    REQUIRE(t.fitted);
    CHECK(t.slope == doctest::Approx(-2.0).epsilon(0.05));
    CHECK(t.slope_lo <= t.slope);
    CHECK(t.slope_hi >= t.slope);
    CHECK_THROWS_AS(tail_slope(x, {1.0}), DomainError);
}

TEST_CASE("tail slope drops sparse points") {
    const auto x = gumbel_sample(2000, 0.5, 12);
    const auto t = tail_slope(x, {0.0, 0.5, 5.0, 6.0});
    CHECK(t.points[0].used);
    CHECK_FALSE(t.points[2].used);
    CHECK_FALSE(t.points[3].used);
}

TEST_CASE("gumbel double-log fit is straight for a pure Gumbel") {
    const auto x = gumbel_sample(100000, 0.5, 13);
    const auto g = gumbel_mixture_shape(x);
    CHECK(g.slope == doctest::Approx(-2.0).epsilon(0.05));
    CHECK(std::abs(g.curvature) < 4 * g.curvature_se + 0.02);
}

TEST_CASE("gumbel fit sees curvature in a mixture") {
    // Randomly shifted Gumbel: ln(-ln F) is no longer linear.
    RngStream rng(14, 0, Component::Field);
    auto x = gumbel_sample(100000, 0.5, 15);
    for (double& v : x) v += rng.uniform() < 0.5 ? 0.0 : 3.0;
    const auto g = gumbel_mixture_shape(x);
    CHECK(std::abs(g.curvature) > 10 * g.curvature_se);
}

TEST_CASE("cluster pairs respect the distance window") {
    const int N = 16;
    std::vector<double> f(N * N, 0.0);
    f[2 * N + 2] = 5.0;
    f[2 * N + 6] = 5.0;  // distance 4
    CHECK(has_cluster_pair(f, N, 2.0, 4.0));
    CHECK(has_cluster_pair(f, N, 4.0, 4.0));   // window [4, 4]
    CHECK_FALSE(has_cluster_pair(f, N, 4.5, 4.0));  // N / r < r
    CHECK_FALSE(has_cluster_pair(f, N, 2.0, 6.0));
    f[2 * N + 6] = 0.0;
    f[2 * N + 3] = 5.0;  // distance 1 < r
    CHECK_FALSE(has_cluster_pair(f, N, 2.0, 4.0));
}

TEST_CASE("cluster thresholds decrease in r") {
    const int N = 256;
    double prev = INFINITY;
    for (double r : {2.0, 4.0, 8.0, 16.0}) {
        const double t = cluster_threshold(N, r, 1.0);
        CHECK(t < prev);
        prev = t;
    }
    CHECK(cluster_threshold(N, std::exp(1.0), 1.0) == doctest::Approx(m_N(N)));
}

TEST_CASE("localization window") {
    CHECK(localization_window(9, 4.0) == std::pair<int, int>{2, 7});
    CHECK(localization_window(9, 16.0) == std::pair<int, int>{4, 5});
    CHECK(localization_window(9, 5.0) == std::pair<int, int>{3, 6});
    const auto w = localization_window(4, 8.0);
    CHECK(w.first > w.second);
}

TEST_CASE("tube exits nest in gamma") {
    // A wider tube (larger gamma) can only be left by paths that also leave the narrower one.
    const int n = 6;
    const std::size_t vol = 1;
    const auto p = VarianceProfile::two_speed();
    RngStream rng(16, 0, Component::Field);
    for (int rep = 0; rep < 500; ++rep) {
        Trajectories tr;
        tr.levels = n;
        double s = 0.0;
        for (int t = 0; t < n; ++t) {
            s += 2.0 * rng.normal();
            tr.data.push_back(s);
        }
        const auto w = localization_window(n, 2.0);
        if (exits_tube(tr, 0, vol, p, n, 0.8, w)) CHECK(exits_tube(tr, 0, vol, p, n, 0.4, w));
        CHECK_FALSE(exits_tube(tr, 0, vol, p, n, 0.5, {5, 2}));
    }
}

TEST_CASE("distances between empirical laws") {
    std::vector<double> a;
    RngStream rng(17, 0, Component::Field);
    for (int i = 0; i < 400; ++i) a.push_back(0.5 * rng.uniform());
    std::vector<double> b = a;
    for (double& v : b) v += 1.0;
    CHECK(dist_distance(a, a, Metric::KS) == doctest::Approx(0.0));
    CHECK(dist_distance(a, a, Metric::LevyProkhorov) == doctest::Approx(0.0));
    CHECK(dist_distance(a, b, Metric::KS) == doctest::Approx(1.0));
    // Shifting by a constant c < 1 moves LP by at most c.
    std::vector<double> c = a;
    for (double& v : c) v += 0.2;
    CHECK(dist_distance(a, c, Metric::LevyProkhorov) <= 0.2 + 1e-3);
    CHECK(dist_distance(a, c, Metric::LevyProkhorov) > 0.0);
    // Point masses: LP = min(shift, 1).
    CHECK(dist_distance({0.0}, {0.3}, Metric::LevyProkhorov) == doctest::Approx(0.3).epsilon(0.01));
    CHECK(dist_distance({0.0}, {3.0}, Metric::LevyProkhorov) == doctest::Approx(1.0).epsilon(0.01));
    // The one-sided distance only penalises one direction, and is bounded by KS.
    const double ab = dist_distance(a, b, Metric::OneSided), ba = dist_distance(b, a, Metric::OneSided);
    CHECK(std::min(ab, ba) == doctest::Approx(0.0).epsilon(1e-3));
    CHECK(std::max(ab, ba) > 0.5);
    CHECK(dist_distance(a, c, Metric::LevyProkhorov) <= dist_distance(a, c, Metric::KS) + 1e-3);
    CHECK(dist_distance(c, a, Metric::LevyProkhorov) == doctest::Approx(dist_distance(a, c, Metric::LevyProkhorov)).epsilon(0.01));
    CHECK(metric_from_string("ks") == Metric::KS);
    CHECK_THROWS(metric_from_string("bogus"));
}

TEST_CASE("subset tail") {
    std::vector<double> m(1000, 0.0);
    for (int i = 0; i < 100; ++i) m[static_cast<std::size_t>(i)] = 5.0;
    const auto s = subset_max_tail(m, 1.0, 10, 100, 2.0, 0.0);
    CHECK(s.prob.p == doctest::Approx(0.1));
    CHECK(s.c_hat == doctest::Approx(0.1 * 10 * std::exp(4.0)));
}
