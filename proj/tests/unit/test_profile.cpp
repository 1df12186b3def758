#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "lcgf/centering.hpp"
#include "lcgf/errors.hpp"
#include "lcgf/profile.hpp"

using namespace lcgf;

namespace {
// Midpoint-rule oracle for int_a^b sigma^2.
double riemann(const VarianceProfile& p, double a, double b, int steps = 200000) {
    double h = (b - a) / steps, s = 0.0;
    for (int i = 0; i < steps; ++i) {
        const double x = p.sigma(a + (i + 0.5) * h);
        s += x * x * h;
    }
    return s;
}

VarianceProfile smooth_convex() {
    // sigma(s) = a + b s with a = 0.6 and b chosen so that I(1) = 1.
    const double a = 0.6;
    const double b = (-a + std::sqrt(a * a - 4.0 / 3.0 * (a * a - 1.0))) / (2.0 / 3.0);
    return VarianceProfile::linear({0.0, 1.0}, {a, a + b});
}
}  // namespace

TEST_CASE("I_sigma2 examples") {
    const auto one = VarianceProfile::constant();
    CHECK(I_sigma2(one, 0.2, 0.7) == doctest::Approx(0.5).epsilon(1e-15));
    const auto two = VarianceProfile::two_speed();
    CHECK(std::abs(two.I(0.0, 1.0) - 1.0) < 1e-12);
    CHECK(two.I(0.0, 0.75) == doctest::Approx(0.625).epsilon(1e-14));
    CHECK_THROWS_AS((void)two.I(0.6, 0.4), DomainError);
    CHECK(two.sigma(0.5) == doctest::Approx(std::sqrt(0.5)));
    CHECK(two.sigma(0.5000001) == doctest::Approx(std::sqrt(1.5)));
}

TEST_CASE("I_sigma2 is additive and matches a Riemann oracle") {
    const auto lin = smooth_convex();
    const auto stp = VarianceProfile::step({0.0, 0.2, 0.45, 1.0}, {0.5, 0.8, 1.2}).normalized();
    for (const auto* p : {&lin, &stp}) {
        for (double a : {0.0, 0.1, 0.2, 0.45}) {
            for (double b : {0.45, 0.6, 1.0}) {
                for (double c : {0.6, 0.8, 1.0}) {
                    if (!(a <= b && b <= c)) continue;
                    CHECK(std::abs(p->I(a, c) - p->I(a, b) - p->I(b, c)) < 1e-12);
                }
                if (a <= b) CHECK(p->I(a, b) == doctest::Approx(riemann(*p, a, b)).epsilon(1e-5));
            }
        }
    }
}

TEST_CASE("check_assumption") {
    CHECK_FALSE(check_assumption(VarianceProfile::constant()).pass);
    const auto rep = check_assumption(VarianceProfile::two_speed());
    CHECK(rep.pass);
    CHECK(rep.below_diagonal);
    CHECK(rep.sigma0_below_one);
    CHECK(rep.sigma1_above_one);
    const auto short_mass = VarianceProfile::step({0.0, 0.5, 1.0}, {std::sqrt(0.4), std::sqrt(1.4)});
    CHECK(std::abs(short_mass.I(0.0, 1.0) - 0.9) < 1e-12);
    const auto r2 = check_assumption(short_mass);
    CHECK_FALSE(r2.normalized);
    CHECK_FALSE(r2.pass);
}

TEST_CASE("step_envelopes") {
    const auto two = VarianceProfile::two_speed();
    const auto e = step_envelopes(two, 4);
    CHECK(e.lower.values() == two.values());
    CHECK(e.upper.values() == two.values());

    const auto lin = smooth_convex();
    REQUIRE(check_assumption(lin).pass);
    const auto env = step_envelopes(lin, 4);
    CHECK(std::abs(env.lower.I(0, 1) - 1.0) < 1e-12);
    CHECK(std::abs(env.upper.I(0, 1) - 1.0) < 1e-12);
    for (int i = 1; i < 1000; ++i) {
        const double x = i / 1000.0;
        CHECK(env.lower.I(x) <= lin.I(x) + 1e-12);
        CHECK(lin.I(x) <= env.upper.I(x) + 1e-12);
        CHECK(env.upper.I(x) < x);
    }
    CHECK_THROWS_AS(step_envelopes(VarianceProfile::constant(), 4), ConfigError);
}

TEST_CASE("profile files") {
    const std::string path = "profile_test.json";
    {
        std::ofstream out(path);
        out << R"({"kind": "step", "breakpoints": [0, 0.5, 1], "values": [1, 3], "normalize": true})";
    }
    const auto p = load_profile(path);
    CHECK(std::abs(p.I(0, 1) - 1.0) < 1e-12);
    CHECK(p.sigma(1.0) / p.sigma(0.0) == doctest::Approx(3.0));
    CHECK_THROWS_AS(profile_from_json_text(R"({"kind": "step", "breakpoints": [0, 1], "values": [2]})"),
                    ConfigError);
    CHECK_THROWS_AS(
        profile_from_json_text(R"({"kind": "step", "breakpoints": [0, 1], "values": [1], "colour": 1})"),
        ConfigError);
    const auto round = profile_from_json_text(profile_to_json_text(VarianceProfile::two_speed()));
    CHECK(round.values() == VarianceProfile::two_speed().values());
    std::remove(path.c_str());
}

TEST_CASE("centering constants") {
    CHECK(m_N(256) == doctest::Approx(2 * std::log(256.0) - std::log(std::log(256.0)) / 4).epsilon(1e-15));
    CHECK(m_N(256) == doctest::Approx(10.6621).epsilon(1e-5));
    CHECK_THROWS_AS(m_N(2.5), DomainError);

    const auto one = VarianceProfile::constant();
    for (int n : {4, 8, 9, 12}) {
        for (int lbar : {0, 1, 3}) {
            const double Mn = M_n(one, n, 0, n, lbar);
            CHECK(Mn == doctest::Approx(2 * std::log(2.0) * n - std::log(double(n)) / 4).epsilon(1e-14));
            CHECK(Mn - m_N(std::pow(2.0, n)) == doctest::Approx(std::log(std::log(2.0)) / 4).epsilon(1e-12));
        }
    }
    const auto two = VarianceProfile::two_speed();
    // Empty integral: only the correction term remains.
    CHECK(M_n(two, 9, 3, 3, 2) == doctest::Approx(-3 * std::log(9.0) / (4 * 7)));
    CHECK(tube_half_width(2, 9, 0.6) == doctest::Approx(std::pow(2.0, 0.6)));
    CHECK(tube_half_width(7, 9, 0.6) == tube_half_width(2, 9, 0.6));
}
