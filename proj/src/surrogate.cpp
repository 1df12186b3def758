#include "lcgf/surrogate.hpp"

#include <algorithm>
#include <cmath>

#include "lcgf/errors.hpp"

namespace lcgf {

void SurrogateParams::validate() const {
    if (k < 0 || l < 0 || k + l < 2 || k + l > 12) throw ConfigError("surrogate: need 2 <= k + l <= 12");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("surrogate: gamma must lie in (0, 1)");
    if (!(beta_star > 0.0) || !std::isfinite(beta_star)) throw ConfigError("surrogate: beta_star must be positive");
}

SurrogateSampler::SurrogateSampler(SurrogateParams params) : p_(std::move(params)) {
    p_.validate();
    const double kb = p_.kbar();
    const double s0sq = p_.profile.sigma0() * p_.profile.sigma0();
    raw_p_ = p_.beta_star * std::exp(2.0 * std::pow(kb, p_.gamma)) *
             std::exp(2.0 * std::log(2.0) * kb * (s0sq - 1.0));
    p_rho_ = std::clamp(raw_p_, 0.0, 1.0);
    coarse_ = std::make_unique<RectDgffSampler>(p_.KL() - 2, p_.KL() - 2);
}

void SurrogateSampler::sample(std::uint64_t seed, std::uint64_t replica, SurrogateDraw& out,
                              bool keep_cells) const {
    const int KL = p_.KL();
    const std::size_t R = static_cast<std::size_t>(KL) * KL;
    const double s0 = p_.profile.sigma0();
    const double s0sq = s0 * s0;
    const double logkl = std::log(static_cast<double>(KL));
    const double shift = -std::pow(static_cast<double>(p_.kbar()), p_.gamma);

    RngStream rb(seed, replica, Component::Bernoulli);
    RngStream ry(seed, replica, Component::Peak);
    RngStream rz(seed, replica, Component::Background);

    // Z: sigma(0) times the DGFF on V_KL, zero on its boundary cells.
    std::vector<double> inner(static_cast<std::size_t>(KL - 2) * (KL - 2));
    coarse_->sample(rz, inner.data());

    out.empty = true;
    out.active = 0;
    out.g_star = -INFINITY;
    out.d_kl = 0.0;
    out.cells.clear();
    if (keep_cells) out.cells.resize(R);
    for (int y = 0; y < KL; ++y) {
        for (int x = 0; x < KL; ++x) {
            const bool interior = x > 0 && y > 0 && x < KL - 1 && y < KL - 1;
            const double z = interior ? s0 * inner[static_cast<std::size_t>(y - 1) * (KL - 2) + x - 1] : 0.0;
            // Draw both regardless of rho so the streams stay aligned across beta_star.
            const bool rho = rb.bernoulli(p_rho_);
            const double yv = shift + ry.exponential(2.0);
            const double g = (rho ? yv + 2.0 * logkl * (1.0 - s0sq) : 0.0) + z - 2.0 * logkl;
            out.d_kl += std::exp(-2.0 * (2.0 * logkl * (1.0 + s0sq) - z));
            if (rho) {
                ++out.active;
                out.empty = false;
                out.g_star = std::max(out.g_star, g);
            }
            if (keep_cells) out.cells[static_cast<std::size_t>(y) * KL + x] = {rho, yv, z, g};
        }
    }
}

}  // namespace lcgf
