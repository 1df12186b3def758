#pragma once

#include <string>
#include <vector>

namespace lcgf {

// Speed function sigma on [0,1]. Step profiles hold one value per interval
// (the value at an interior breakpoint belongs to the interval on its left,
// sigma(0) to the first interval); piecewise-linear profiles hold one value
// per breakpoint. Breakpoints always start at 0 and end at 1.
class VarianceProfile {
public:
    enum class Kind { Step, Linear };

    VarianceProfile(Kind kind, std::vector<double> breakpoints, std::vector<double> values);

    static VarianceProfile constant();
    // sigma^2 = s0sq on [0, brk] and the value making I(1) = 1 on (brk, 1].
    static VarianceProfile two_speed(double brk = 0.5, double s0sq = 0.5);
    static VarianceProfile step(std::vector<double> breakpoints, std::vector<double> values);
    static VarianceProfile linear(std::vector<double> breakpoints, std::vector<double> values);

    [[nodiscard]] Kind kind() const { return kind_; }
    [[nodiscard]] bool is_step() const { return kind_ == Kind::Step; }
    [[nodiscard]] const std::vector<double>& breakpoints() const { return bp_; }
    [[nodiscard]] const std::vector<double>& values() const { return val_; }

    [[nodiscard]] double sigma(double s) const;
    [[nodiscard]] double sigma0() const { return sigma(0.0); }
    [[nodiscard]] double sigma1() const { return sigma(1.0); }

    // I_{sigma^2}(a, b) = int_a^b sigma^2. Throws DomainError unless 0 <= a <= b <= 1.
    [[nodiscard]] double I(double a, double b) const;
    [[nodiscard]] double I(double x) const { return I(0.0, x); }
    // int_a^b sigma (not squared): the per-level weight of the branching walks.
    [[nodiscard]] double integral_sigma(double a, double b) const;

    // Copy rescaled so that I(1) = 1.
    [[nodiscard]] VarianceProfile normalized() const;

    // Step-profile view: scales 0 = l_0 < ... < l_M = 1 and sigma_i on (l_{i-1}, l_i].
    // Throws ConfigError for linear profiles.
    [[nodiscard]] const std::vector<double>& step_scales() const;
    [[nodiscard]] const std::vector<double>& step_sigmas() const;

    [[nodiscard]] std::string describe() const;

private:
    template <class F>
    double integrate(double a, double b, F piece) const;

    Kind kind_;
    std::vector<double> bp_;
    std::vector<double> val_;
};

inline double I_sigma2(const VarianceProfile& p, double a, double b) { return p.I(a, b); }

struct AssumptionReport {
    bool below_diagonal = false;  // I(x) < x - margin on the interior grid
    bool sigma0_below_one = false;
    bool sigma1_above_one = false;
    bool normalized = false;      // |I(1) - 1| <= 1e-12
    double worst_gap = 0.0;       // max over grid of I(x) - x
    double worst_x = 0.0;
    bool pass = false;
};

AssumptionReport check_assumption(const VarianceProfile& p, int grid_resolution = 1024,
                                  double margin = 1e-9);

struct Envelopes {
    VarianceProfile lower;
    VarianceProfile upper;
};

// Step profiles sandwiching p: I_lower <= I_p <= I_upper < x on a 1001-point grid.
// Throws ConfigError (with the failing point) when that cannot be achieved
// with M equal cells.
Envelopes step_envelopes(const VarianceProfile& p, int M);

// JSON profile file: {"kind": "step"|"piecewise-linear", "breakpoints": [...],
// "values": [...], "normalize": bool}. Unknown keys are rejected.
VarianceProfile load_profile(const std::string& path);
VarianceProfile profile_from_json_text(const std::string& text);
std::string profile_to_json_text(const VarianceProfile& p);

}  // namespace lcgf
