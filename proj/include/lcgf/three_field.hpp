#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "lcgf/brw.hpp"
#include "lcgf/dgff.hpp"
#include "lcgf/green.hpp"
#include "lcgf/lattice.hpp"
#include "lcgf/profile.hpp"

namespace lcgf {

// N = 2^n, K = 2^k, L = 2^l, K' = 2^kp, L' = 2^lp.
struct ThreeFieldParams {
    int n = 0, k = 0, l = 0, kp = 0, lp = 0;
    VarianceProfile profile = VarianceProfile::two_speed();
    double alpha = 0.0;      // the alpha used in the matching identity
    double delta = 1.0 / 16; // for V*_{N,delta}
    std::vector<double> a;   // per residue class v mod K'L', row-major; empty = not matched

    [[nodiscard]] int N() const { return 1 << n; }
    [[nodiscard]] int KL() const { return 1 << (k + l); }
    [[nodiscard]] int KpLp() const { return 1 << (kp + lp); }
    [[nodiscard]] int box() const { return N() / KL(); }  // side of the N/KL boxes
    [[nodiscard]] int kbar() const { return k + l; }
    [[nodiscard]] int lbar() const { return kp + lp; }
    [[nodiscard]] std::size_t residue(Vertex v) const {
        return static_cast<std::size_t>(v.y % KpLp()) * KpLp() + v.x % KpLp();
    }
    // Throws ConfigError unless N/KL > K'L' and the exponents are consistent.
    void validate() const;
};

struct ThreeFieldDraw {
    std::vector<double> total;        // S^N, BoxSpec::index order
    std::vector<double> coarse_box;   // S^c per N/KL box (row-major boxes)
    std::vector<double> fine_box_max; // max over each N/KL box of S - S^c
    // Only filled when components are requested.
    std::vector<double> coarse, middle, bottom, phi;
};

// S^N = S^c + S^m + S^b + a_{v mod K'L'} Phi_j with independent streams per
// component: coarse = sigma(0) DGFF on V_KL read at the box index, bottom =
// sigma(1) independent DGFFs on each K'L' box, intermediate = an independent
// torus MIBRW on each N/KL box over levels K'L'..N/KL (log2), read at the
// K'L'-box corner, and one Phi per K'L' box.
class ThreeFieldSampler {
public:
    explicit ThreeFieldSampler(ThreeFieldParams params);

    [[nodiscard]] const ThreeFieldParams& params() const { return p_; }
    void sample(std::uint64_t seed, std::uint64_t replica, ThreeFieldDraw& out,
                bool keep_components = false) const;

    // Var(S^c_v + S^m_v + S^b_v) from the component laws.
    [[nodiscard]] double component_variance(Vertex v) const;
    [[nodiscard]] double coarse_variance(std::size_t box_index) const;
    // Exact Cov(S_u, S_v), including the matching term when constants are set.
    [[nodiscard]] double covariance(Vertex u, Vertex v) const;
    [[nodiscard]] const std::vector<double>& level_weights() const { return w_; }

private:
    ThreeFieldParams p_;
    std::vector<double> w_;
    std::vector<double> coarse_diag_;  // G_{V_KL} on V_KL, row-major
    std::vector<double> bottom_diag_;  // G_{V_K'L'} on V_K'L', row-major
    double middle_var_ = 0.0;
    std::unique_ptr<RectDgffSampler> coarse_, bottom_;
    std::shared_ptr<const RectGreen> coarse_green_, bottom_green_;
};

struct MatchResult {
    std::vector<double> a;       // per residue class
    std::vector<double> a2;      // per residue class, before the square root
    double mean_abs_gap = 0.0;   // mean over V* of |Var S_v - Var psi_v - 4 alpha|
    double max_abs_gap = 0.0;
    double max_a = 0.0;
    double bound = 0.0;          // sqrt(8 alpha)
    std::int64_t vstar_size = 0;
    std::int64_t classes_used = 0;
};

// a^2_{N,v} = Var psi_v + 4 alpha - Var(S^c + S^m + S^b)_v, averaged over the
// members of V*_{N,delta} in each residue class. Classes without members get
// the overall mean. A negative class average raises NumericError with a
// suggested alpha.
MatchResult variance_match_constants(const ThreeFieldSampler& sampler, const std::vector<double>& psi_var);

}  // namespace lcgf
