#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "lcgf/dgff.hpp"
#include "lcgf/profile.hpp"

namespace lcgf {

struct SurrogateParams {
    int k = 1, l = 1;  // K = 2^k, L = 2^l; R = (KL)^2 cells
    double gamma = 0.6;
    double beta_star = 1.0;
    VarianceProfile profile = VarianceProfile::two_speed();

    [[nodiscard]] int KL() const { return 1 << (k + l); }
    [[nodiscard]] int kbar() const { return k + l; }
    void validate() const;
};

struct SurrogateCell {
    bool rho = false;
    double y = 0.0;  // peak: -kbar^gamma + Exp(2)
    double z = 0.0;  // coarse background
    double g = 0.0;  // rho (Y + 2 log(KL)(1 - sigma0^2)) + Z - 2 log(KL)
};

struct SurrogateDraw {
    bool empty = true;  // no cell with rho = 1; g_star is then meaningless
    double g_star = 0.0;
    std::int64_t active = 0;
    double d_kl = 0.0;  // sum_i exp(-2 S_i), S_i = 2 log(KL)(1 + sigma0^2) - Z_i
    std::vector<SurrogateCell> cells;
};

// Bernoulli-thinned shifted-exponential peaks on a coarse DGFF background.
class SurrogateSampler {
public:
    explicit SurrogateSampler(SurrogateParams params);

    [[nodiscard]] const SurrogateParams& params() const { return p_; }
    // Success probability before clamping and after.
    [[nodiscard]] double raw_probability() const { return raw_p_; }
    [[nodiscard]] double probability() const { return p_rho_; }
    [[nodiscard]] bool clamped() const { return raw_p_ > 1.0; }

    void sample(std::uint64_t seed, std::uint64_t replica, SurrogateDraw& out, bool keep_cells = false) const;

private:
    SurrogateParams p_;
    double raw_p_ = 0.0, p_rho_ = 0.0;
    std::unique_ptr<RectDgffSampler> coarse_;
};

}  // namespace lcgf
