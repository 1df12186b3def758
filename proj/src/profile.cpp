#include "lcgf/profile.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lcgf/errors.hpp"

namespace lcgf {

namespace {

void validate(VarianceProfile::Kind kind, const std::vector<double>& bp,
              const std::vector<double>& val) {
    if (bp.size() < 2) throw ConfigError("profile needs at least the breakpoints 0 and 1");
    if (bp.front() != 0.0 || bp.back() != 1.0) {
        throw ConfigError("profile breakpoints must start at 0 and end at 1");
    }
    for (std::size_t i = 1; i < bp.size(); ++i) {
        if (!(bp[i] > bp[i - 1])) throw ConfigError("profile breakpoints must be strictly ascending");
    }
    const std::size_t want = kind == VarianceProfile::Kind::Step ? bp.size() - 1 : bp.size();
    if (val.size() != want) {
        throw ConfigError("profile expects " + std::to_string(want) + " values, got " +
                          std::to_string(val.size()));
    }
    for (double v : val) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("profile values must be finite and >= 0");
    }
}

}  // namespace

VarianceProfile::VarianceProfile(Kind kind, std::vector<double> breakpoints,
                                 std::vector<double> values)
    : kind_(kind), bp_(std::move(breakpoints)), val_(std::move(values)) {
    validate(kind_, bp_, val_);
}

VarianceProfile VarianceProfile::constant() { return step({0.0, 1.0}, {1.0}); }

VarianceProfile VarianceProfile::two_speed(double brk, double s0sq) {
    if (!(brk > 0.0 && brk < 1.0)) throw ConfigError("two_speed: breakpoint must lie in (0, 1)");
    const double s1sq = (1.0 - brk * s0sq) / (1.0 - brk);
    if (!(s0sq >= 0.0) || !(s1sq >= 0.0)) throw ConfigError("two_speed: infeasible sigma(0)^2");
    return step({0.0, brk, 1.0}, {std::sqrt(s0sq), std::sqrt(s1sq)});
}

VarianceProfile VarianceProfile::step(std::vector<double> breakpoints, std::vector<double> values) {
    return {Kind::Step, std::move(breakpoints), std::move(values)};
}

VarianceProfile VarianceProfile::linear(std::vector<double> breakpoints,
                                        std::vector<double> values) {
    return {Kind::Linear, std::move(breakpoints), std::move(values)};
}

double VarianceProfile::sigma(double s) const {
    if (!(s >= 0.0 && s <= 1.0)) throw DomainError("sigma: argument outside [0, 1]");
    // First breakpoint index with bp >= s; s lies in (bp[j-1], bp[j]].
    auto it = std::lower_bound(bp_.begin(), bp_.end(), s);
    std::size_t j = static_cast<std::size_t>(it - bp_.begin());
    if (kind_ == Kind::Step) {
        return val_[j == 0 ? 0 : j - 1];
    }
    if (j == 0) return val_[0];
    const double t = (s - bp_[j - 1]) / (bp_[j] - bp_[j - 1]);
    return val_[j - 1] + t * (val_[j] - val_[j - 1]);
}

template <class F>
double VarianceProfile::integrate(double a, double b, F piece) const {
    if (!(a >= 0.0 && a <= b && b <= 1.0)) {
        throw DomainError("profile integral needs 0 <= a <= b <= 1");
    }
    double total = 0.0;
    for (std::size_t i = 1; i < bp_.size(); ++i) {
        const double lo = std::max(a, bp_[i - 1]);
        const double hi = std::min(b, bp_[i]);
        if (hi <= lo) continue;
        double s_lo, s_hi;
        if (kind_ == Kind::Step) {
            s_lo = s_hi = val_[i - 1];
        } else {
            const double w = bp_[i] - bp_[i - 1];
            s_lo = val_[i - 1] + (lo - bp_[i - 1]) / w * (val_[i] - val_[i - 1]);
            s_hi = val_[i - 1] + (hi - bp_[i - 1]) / w * (val_[i] - val_[i - 1]);
        }
        total += piece(hi - lo, s_lo, s_hi);
    }
    return total;
}

double VarianceProfile::I(double a, double b) const {
    return integrate(a, b, [](double h, double p, double q) {
        return h * (p * p + p * q + q * q) / 3.0;
    });
}

double VarianceProfile::integral_sigma(double a, double b) const {
    return integrate(a, b, [](double h, double p, double q) { return h * (p + q) / 2.0; });
}

VarianceProfile VarianceProfile::normalized() const {
    const double total = I(0.0, 1.0);
    if (!(total > 0.0)) throw ConfigError("cannot normalize a profile with I(1) = 0");
    std::vector<double> v = val_;
    const double f = 1.0 / std::sqrt(total);
    for (double& x : v) x *= f;
    return {kind_, bp_, std::move(v)};
}

const std::vector<double>& VarianceProfile::step_scales() const {
    if (kind_ != Kind::Step) throw ConfigError("profile is not a step function");
    return bp_;
}

const std::vector<double>& VarianceProfile::step_sigmas() const {
    if (kind_ != Kind::Step) throw ConfigError("profile is not a step function");
    return val_;
}

std::string VarianceProfile::describe() const { return profile_to_json_text(*this); }

AssumptionReport check_assumption(const VarianceProfile& p, int grid_resolution, double margin) {
    AssumptionReport r;
    if (grid_resolution < 2) grid_resolution = 2;
    r.worst_gap = -1.0;
    for (int i = 1; i < grid_resolution; ++i) {
        const double x = static_cast<double>(i) / grid_resolution;
        const double gap = p.I(x) - x;
        if (gap > r.worst_gap) {
            r.worst_gap = gap;
            r.worst_x = x;
        }
    }
    r.below_diagonal = r.worst_gap < -margin;
    r.sigma0_below_one = p.sigma0() < 1.0;
    r.sigma1_above_one = p.sigma1() > 1.0;
    r.normalized = std::abs(p.I(0.0, 1.0) - 1.0) <= 1e-12;
    r.pass = r.below_diagonal && r.sigma0_below_one && r.sigma1_above_one && r.normalized;
    return r;
}

namespace {

// Extremes of sigma^2 over [a, b]; sigma is monotone between breakpoints.
std::pair<double, double> sigma2_range(const VarianceProfile& p, double a, double b) {
    std::vector<double> pts{a, b};
    for (double x : p.breakpoints()) {
        if (x > a && x < b) pts.push_back(x);
    }
    double lo = INFINITY, hi = 0.0;
    const double eps = 1e-12 * (b - a);
    for (double x : pts) {
        for (double y : {x, std::clamp(x + eps, a, b), std::clamp(x - eps, a, b)}) {
            const double s = p.sigma(y);
            lo = std::min(lo, s * s);
            hi = std::max(hi, s * s);
        }
    }
    return {lo, hi};
}

}  // namespace

Envelopes step_envelopes(const VarianceProfile& p, int M) {
    if (M < 1) throw ConfigError("step_envelopes: M must be positive");
    const AssumptionReport rep = check_assumption(p);
    if (!rep.pass) {
        throw ConfigError("step_envelopes: profile violates the weak-correlation assumption (max I(x)-x = " +
                          std::to_string(rep.worst_gap) + " at x = " + std::to_string(rep.worst_x) + ")");
    }
    if (p.is_step()) return {p, p};

    std::vector<double> bp(M + 1);
    for (int i = 0; i <= M; ++i) bp[i] = static_cast<double>(i) / M;
    std::vector<double> lo2(M), hi2(M);
    for (int i = 0; i < M; ++i) {
        auto [a, b] = sigma2_range(p, bp[i], bp[i + 1]);
        lo2[i] = a;
        hi2[i] = b;
    }
    // Push the normalization deficit/excess into the last cell.
    auto close = [&](std::vector<double>& s2) {
        double mass = 0.0;
        for (int i = 0; i + 1 < M; ++i) mass += s2[i] / M;
        const double last = (1.0 - mass) * M;
        if (last < 0.0) {
            throw ConfigError("step_envelopes: M = " + std::to_string(M) + " leaves negative mass in the last cell");
        }
        s2[M - 1] = last;
        std::vector<double> s(M);
        for (int i = 0; i < M; ++i) s[i] = std::sqrt(s2[i]);
        return VarianceProfile::step(bp, s);
    };
    Envelopes env{close(lo2), close(hi2)};

    for (int i = 1; i < 1000; ++i) {
        const double x = i / 1000.0;
        const double il = env.lower.I(x), ip = p.I(x), iu = env.upper.I(x);
        const double tol = 1e-12;
        if (il > ip + tol || ip > iu + tol || !(iu < x)) {
            std::ostringstream os;
            os << "step_envelopes: M = " << M << " fails at x = " << x << " (lower " << il
               << ", profile " << ip << ", upper " << iu << ")";
            throw ConfigError(os.str());
        }
    }
    return env;
}

VarianceProfile profile_from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("profile: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("profile: expected an object");
    static const std::set<std::string> known{"kind", "breakpoints", "values", "normalize"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.count(it.key())) throw ConfigError("profile: unknown key '" + it.key() + "'");
    }
    try {
        const std::string kind = j.at("kind").get<std::string>();
        VarianceProfile::Kind k;
        if (kind == "step") {
            k = VarianceProfile::Kind::Step;
        } else if (kind == "piecewise-linear") {
            k = VarianceProfile::Kind::Linear;
        } else {
            throw ConfigError("profile: kind must be 'step' or 'piecewise-linear'");
        }
        VarianceProfile p(k, j.at("breakpoints").get<std::vector<double>>(),
                          j.at("values").get<std::vector<double>>());
        if (j.value("normalize", false)) return p.normalized();
        const double total = p.I(0.0, 1.0);
        if (std::abs(total - 1.0) > 1e-12) {
            throw ConfigError("profile: I(1) = " + std::to_string(total) +
                              " != 1 (set normalize=true to rescale)");
        }
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("profile: ") + e.what());
    }
}

VarianceProfile load_profile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open profile file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return profile_from_json_text(ss.str());
}

std::string profile_to_json_text(const VarianceProfile& p) {
    nlohmann::json j;
    j["kind"] = p.is_step() ? "step" : "piecewise-linear";
    j["breakpoints"] = p.breakpoints();
    j["values"] = p.values();
    return j.dump();
}

}  // namespace lcgf
