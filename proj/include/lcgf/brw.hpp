#pragma once

#include <vector>

#include "lcgf/profile.hpp"
#include "lcgf/rng.hpp"

namespace lcgf {

// Per-vertex partial sums over the coarsest t levels, t = 1..levels:
// traj[(t - 1) * V + idx]. The entry for t = levels equals the value.
struct Trajectories {
    int levels = 0;
    std::vector<double> data;

    [[nodiscard]] bool empty() const { return levels == 0; }
    [[nodiscard]] double at(int t, std::size_t idx, std::size_t volume) const {
        return t == 0 ? 0.0 : data[static_cast<std::size_t>(t - 1) * volume + idx];
    }
};

// IBRW on V_{2^n}: level k (box side 2^k, k = 0..n-1) carries one Gaussian
// per dyadic box with weight w_k. Levels are drawn coarse to fine.
class IbrwSampler {
public:
    IbrwSampler(const VarianceProfile& p, int n);
    void sample(RngStream& rng, std::vector<double>& out, Trajectories* traj = nullptr) const;
    [[nodiscard]] const std::vector<double>& weights() const { return w_; }

private:
    int n_;
    std::vector<double> w_;
};

// MIBRW on the M x M torus with levels j in [j_lo, j_hi]: each level adds
// 2^{-j} w_j times the sum of periodized white noise over the window of side
// 2^j ending at v (all 2^{2j} squares containing v). O(M^2) per level via
// cyclic prefix sums. Windows of side >= M cover the whole torus.
void mibrw_torus(int M, const std::vector<double>& w, int j_lo, int j_hi, RngStream& rng,
                 std::vector<double>& out, Trajectories* traj = nullptr);

class MibrwSampler {
public:
    MibrwSampler(const VarianceProfile& p, int n);
    void sample(RngStream& rng, std::vector<double>& out, Trajectories* traj = nullptr) const;
    [[nodiscard]] const std::vector<double>& weights() const { return w_; }

private:
    int n_;
    std::vector<double> w_;
};

}  // namespace lcgf
