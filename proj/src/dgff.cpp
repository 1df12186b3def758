#include "lcgf/dgff.hpp"

#include <cmath>
#include <mutex>

#include <fftw3.h>

#include "lcgf/errors.hpp"

namespace lcgf {

namespace {
// FFTW's planner is not thread safe; execution with the new-array API is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwBuffer {
    explicit FftwBuffer(std::size_t n) : p(fftw_alloc_real(n)) {
        if (!p) throw NumericError("fftw_alloc_real failed");
    }
    ~FftwBuffer() { fftw_free(p); }
    double* p;
};
}  // namespace

RectDgffSampler::RectDgffSampler(int a, int b) : a_(a), b_(b) {
    if (a < 1 || b < 1) throw DomainError("RectDgffSampler needs a, b >= 1");
    constexpr double kHalfPi = 1.57079632679489661923;
    // sum_jk c_jk phi_j(x) phi_k(y) = RODFT00(c) / (2 sqrt((a+1)(b+1))).
    const double norm = 1.0 / (2.0 * std::sqrt((a + 1.0) * (b + 1.0)));
    scale_.resize(static_cast<std::size_t>(a) * b);
    for (int k = 0; k < b; ++k) {
        const double ck = std::cos((k + 1) * M_PI / (b + 1));
        for (int j = 0; j < a; ++j) {
            const double cj = std::cos((j + 1) * M_PI / (a + 1));
            const double mu = 1.0 - 0.5 * (cj + ck);
            scale_[static_cast<std::size_t>(k) * a + j] = norm * std::sqrt(kHalfPi / mu);
        }
    }
    FftwBuffer in(scale_.size()), out(scale_.size());
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan_ = fftw_plan_r2r_2d(b, a, in.p, out.p, FFTW_RODFT00, FFTW_RODFT00, FFTW_ESTIMATE);
    if (!plan_) throw NumericError("FFTW planning failed");
}

RectDgffSampler::~RectDgffSampler() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(plan_));
}

void RectDgffSampler::sample(RngStream& rng, double* out) const {
    const std::size_t n = scale_.size();
    FftwBuffer in(n), res(n);
    for (std::size_t i = 0; i < n; ++i) in.p[i] = scale_[i] * rng.normal();
    fftw_execute_r2r(static_cast<fftw_plan>(plan_), in.p, res.p);
    std::copy(res.p, res.p + n, out);
}

DgffSampler::DgffSampler(int N) : N_(N) {
    if (N < 3) throw DomainError("DgffSampler needs N >= 3");
    inner_ = std::make_unique<RectDgffSampler>(N - 2, N - 2);
}

void DgffSampler::sample(RngStream& rng, std::vector<double>& out) const {
    const int a = N_ - 2;
    std::vector<double> buf(static_cast<std::size_t>(a) * a);
    inner_->sample(rng, buf.data());
    out.assign(static_cast<std::size_t>(N_) * N_, 0.0);
    for (int y = 0; y < a; ++y) {
        std::copy(buf.begin() + static_cast<std::ptrdiff_t>(y) * a,
                  buf.begin() + static_cast<std::ptrdiff_t>(y + 1) * a,
                  out.begin() + static_cast<std::ptrdiff_t>(y + 1) * N_ + 1);
    }
}

PsiSampler::PsiSampler(const BoxSpec& spec, const VarianceProfile& profile)
    : dgff_(spec.side()), op_(spec, profile) {}

void PsiSampler::sample(RngStream& rng, std::vector<double>& out) const {
    std::vector<double> phi;
    dgff_.sample(rng, phi);
    op_.apply(phi, out);
}

}  // namespace lcgf
