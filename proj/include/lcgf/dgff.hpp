#pragma once

#include <memory>
#include <vector>

#include "lcgf/lattice.hpp"
#include "lcgf/profile.hpp"
#include "lcgf/psi.hpp"
#include "lcgf/rng.hpp"

namespace lcgf {

// Exact DGFF on an a x b block of interior sites with zero outside, sampled
// in the Dirichlet sine basis: one Gaussian per eigenmode, then a 2D
// RODFT00 transform. Output layout is local row-major (y * a + x).
class RectDgffSampler {
public:
    RectDgffSampler(int a, int b);
    ~RectDgffSampler();
    RectDgffSampler(const RectDgffSampler&) = delete;
    RectDgffSampler& operator=(const RectDgffSampler&) = delete;

    [[nodiscard]] int a() const { return a_; }
    [[nodiscard]] int b() const { return b_; }
    void sample(RngStream& rng, double* out) const;

private:
    int a_, b_;
    std::vector<double> scale_;  // per mode, includes transform normalization
    void* plan_ = nullptr;
};

// DGFF on V_N (zero on the boundary), BoxSpec::index layout.
class DgffSampler {
public:
    explicit DgffSampler(int N);
    [[nodiscard]] int side() const { return N_; }
    void sample(RngStream& rng, std::vector<double>& out) const;

private:
    int N_;
    std::unique_ptr<RectDgffSampler> inner_;
};

// psi = A phi with phi an exact DGFF sample; same stream as the DGFF path.
class PsiSampler {
public:
    PsiSampler(const BoxSpec& spec, const VarianceProfile& profile);
    void sample(RngStream& rng, std::vector<double>& out) const;
    [[nodiscard]] const PsiOperator& op() const { return op_; }

private:
    DgffSampler dgff_;
    PsiOperator op_;
};

}  // namespace lcgf
