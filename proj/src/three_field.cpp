#include "lcgf/three_field.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lcgf/brw_cov.hpp"
#include "lcgf/errors.hpp"
#include "lcgf/green.hpp"

namespace lcgf {

void ThreeFieldParams::validate() const {
    if (n < 2 || n > 14) throw ConfigError("three-field: n must lie in [2, 14]");
    if (k < 0 || l < 0 || kp < 0 || lp < 0) throw ConfigError("three-field: negative exponent");
    if (l < 1) throw ConfigError("three-field: L must be at least 2 (V* uses side-L boxes)");
    if (k + l < 1) throw ConfigError("three-field: K*L must be at least 2");
    if (kp + lp < 1) throw ConfigError("three-field: K'*L' must be at least 2");
    if (n - k - l <= kp + lp) throw ConfigError("three-field: need N/KL > K'L'");
    if (!(alpha >= 0.0)) throw ConfigError("three-field: alpha must be non-negative");
    const std::size_t classes = static_cast<std::size_t>(KpLp()) * KpLp();
    if (!a.empty() && a.size() != classes) {
        throw ConfigError("three-field: expected " + std::to_string(classes) + " matching constants");
    }
}

namespace {
// Local interior diagonal of the DGFF on V_side laid out on the full side x side block.
std::vector<double> padded_diagonal(int side) {
    std::vector<double> d(static_cast<std::size_t>(side) * side, 0.0);
    if (side < 3) return d;
    const auto g = rect_green(side - 2, side - 2);
    const auto inner = g->diagonal();
    for (int y = 1; y < side - 1; ++y)
        for (int x = 1; x < side - 1; ++x)
            d[static_cast<std::size_t>(y) * side + x] = inner[static_cast<std::size_t>(y - 1) * (side - 2) + x - 1];
    return d;
}

// Sample on V_side into the full side x side block, zero on the ring.
void padded_sample(const RectDgffSampler* s, int side, RngStream& rng, std::vector<double>& out,
                   std::vector<double>& scratch) {
    out.assign(static_cast<std::size_t>(side) * side, 0.0);
    if (!s) return;
    const int a = side - 2;
    scratch.resize(static_cast<std::size_t>(a) * a);
    s->sample(rng, scratch.data());
    for (int y = 1; y < side - 1; ++y)
        for (int x = 1; x < side - 1; ++x)
            out[static_cast<std::size_t>(y) * side + x] = scratch[static_cast<std::size_t>(y - 1) * a + x - 1];
}
}  // namespace

ThreeFieldSampler::ThreeFieldSampler(ThreeFieldParams params) : p_(std::move(params)) {
    p_.validate();
    w_ = lcgf::level_weights(p_.profile, p_.n);
    coarse_diag_ = padded_diagonal(p_.KL());
    bottom_diag_ = padded_diagonal(p_.KpLp());
    for (int j = p_.lbar(); j <= p_.n - p_.kbar(); ++j) middle_var_ += w_[j] * w_[j];
    if (p_.KL() >= 3) {
        coarse_ = std::make_unique<RectDgffSampler>(p_.KL() - 2, p_.KL() - 2);
        coarse_green_ = rect_green(p_.KL() - 2, p_.KL() - 2);
    }
    if (p_.KpLp() >= 3) {
        bottom_ = std::make_unique<RectDgffSampler>(p_.KpLp() - 2, p_.KpLp() - 2);
        bottom_green_ = rect_green(p_.KpLp() - 2, p_.KpLp() - 2);
    }
}

double ThreeFieldSampler::coarse_variance(std::size_t box_index) const {
    const double s0 = p_.profile.sigma0();
    return s0 * s0 * coarse_diag_.at(box_index);
}

double ThreeFieldSampler::component_variance(Vertex v) const {
    const int B = p_.box();
    const std::size_t box = static_cast<std::size_t>(v.y / B) * p_.KL() + v.x / B;
    const double s1 = p_.profile.sigma1();
    return coarse_variance(box) + s1 * s1 * bottom_diag_[p_.residue(v)] + middle_var_;
}

double ThreeFieldSampler::covariance(Vertex u, Vertex v) const {
    const int B = p_.box(), b = p_.KpLp(), KL = p_.KL();
    const double s0 = p_.profile.sigma0(), s1 = p_.profile.sigma1();
    // Interior test on a side-s block (ring sites have zero field).
    auto inner = [](int x, int y, int s) { return x > 0 && y > 0 && x < s - 1 && y < s - 1; };
    double c = 0.0;
    const int ux = u.x / B, uy = u.y / B, vx = v.x / B, vy = v.y / B;
    if (coarse_green_ && inner(ux, uy, KL) && inner(vx, vy, KL)) c += s0 * s0 * (*coarse_green_)(ux, uy, vx, vy);
    if (ux == vx && uy == vy) {
        const Vertex cu{(u.x % B) - (u.x % b), (u.y % B) - (u.y % b)};
        const Vertex cv{(v.x % B) - (v.x % b), (v.y % B) - (v.y % b)};
        const std::vector<double> w(w_.begin(), w_.begin() + (p_.n - p_.kbar() + 1));
        c += mibrw_cov(w, B, cu, cv, p_.lbar());
    }
    if (u.x / b == v.x / b && u.y / b == v.y / b) {
        const int px = u.x % b, py = u.y % b, qx = v.x % b, qy = v.y % b;
        if (bottom_green_ && inner(px, py, b) && inner(qx, qy, b)) c += s1 * s1 * (*bottom_green_)(px, py, qx, qy);
        if (!p_.a.empty()) c += p_.a[p_.residue(u)] * p_.a[p_.residue(v)];
    }
    return c;
}

void ThreeFieldSampler::sample(std::uint64_t seed, std::uint64_t replica, ThreeFieldDraw& out,
                               bool keep_components) const {
    const int N = p_.N(), KL = p_.KL(), B = p_.box(), b = p_.KpLp();
    const std::size_t vol = static_cast<std::size_t>(N) * N;
    const double s0 = p_.profile.sigma0(), s1 = p_.profile.sigma1();

    RngStream rc(seed, replica, Component::Coarse);
    RngStream rm(seed, replica, Component::Intermediate);
    RngStream rb(seed, replica, Component::Bottom);
    RngStream rp(seed, replica, Component::Phi);

    std::vector<double> scratch;
    padded_sample(coarse_.get(), KL, rc, out.coarse_box, scratch);
    for (double& c : out.coarse_box) c *= s0;

    out.total.assign(vol, 0.0);
    if (keep_components) {
        out.coarse.assign(vol, 0.0);
        out.middle.assign(vol, 0.0);
        out.bottom.assign(vol, 0.0);
        out.phi.assign(vol, 0.0);
    } else {
        out.coarse.clear();
        out.middle.clear();
        out.bottom.clear();
        out.phi.clear();
    }

    // Intermediate: one torus per N/KL box, boxes in row-major order.
    std::vector<double> torus;
    const int j_lo = p_.lbar(), j_hi = p_.n - p_.kbar();
    for (int by = 0; by < KL; ++by) {
        for (int bx = 0; bx < KL; ++bx) {
            mibrw_torus(B, w_, j_lo, j_hi, rm, torus);
            for (int y = 0; y < B; ++y) {
                const int cy = y - y % b;
                for (int x = 0; x < B; ++x) {
                    const int cx = x - x % b;
                    const double m = torus[static_cast<std::size_t>(cy) * B + cx];
                    const std::size_t idx = static_cast<std::size_t>(by * B + y) * N + bx * B + x;
                    out.total[idx] += m;
                    if (keep_components) out.middle[idx] = m;
                }
            }
        }
    }

    // Bottom and Phi: one DGFF and one standard normal per K'L' box.
    const int small = N / b;
    std::vector<double> block;
    const bool matched = !p_.a.empty();
    for (int sy = 0; sy < small; ++sy) {
        for (int sx = 0; sx < small; ++sx) {
            padded_sample(bottom_.get(), b, rb, block, scratch);
            const double phi = rp.normal();
            for (int y = 0; y < b; ++y) {
                for (int x = 0; x < b; ++x) {
                    const std::size_t r = static_cast<std::size_t>(y) * b + x;
                    const double bot = s1 * block[r];
                    const double ph = matched ? p_.a[r] * phi : 0.0;
                    const std::size_t idx = static_cast<std::size_t>(sy * b + y) * N + sx * b + x;
                    out.total[idx] += bot + ph;
                    if (keep_components) {
                        out.bottom[idx] = bot;
                        out.phi[idx] = ph;
                    }
                }
            }
        }
    }

    // Coarse last so the fine maxima can be read off before adding it.
    out.fine_box_max.assign(static_cast<std::size_t>(KL) * KL, -INFINITY);
    for (int y = 0; y < N; ++y) {
        for (int x = 0; x < N; ++x) {
            const std::size_t box = static_cast<std::size_t>(y / B) * KL + x / B;
            const std::size_t idx = static_cast<std::size_t>(y) * N + x;
            out.fine_box_max[box] = std::max(out.fine_box_max[box], out.total[idx]);
            out.total[idx] += out.coarse_box[box];
            if (keep_components) out.coarse[idx] = out.coarse_box[box];
        }
    }
}

MatchResult variance_match_constants(const ThreeFieldSampler& sampler, const std::vector<double>& psi_var) {
    const auto& p = sampler.params();
    const int N = p.N(), b = p.KpLp();
    const std::size_t vol = static_cast<std::size_t>(N) * N;
    if (psi_var.size() != vol) throw DomainError("variance_match_constants: psi variance has the wrong size");
    const BoxSpec spec = BoxSpec::from_side(N);
    const auto mask = restricted_set(spec, 1 << p.k, 1 << p.l, p.delta);

    const std::size_t classes = static_cast<std::size_t>(b) * b;
    std::vector<double> sum(classes, 0.0);
    std::vector<std::int64_t> cnt(classes, 0);
    std::vector<double> target(vol, 0.0);  // Var psi + 4 alpha - component variance
    MatchResult r;
    for (int y = 0; y < N; ++y) {
        for (int x = 0; x < N; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * N + x;
            if (!mask[idx]) continue;
            const Vertex v{x, y};
            target[idx] = psi_var[idx] + 4.0 * p.alpha - sampler.component_variance(v);
            sum[p.residue(v)] += target[idx];
            ++cnt[p.residue(v)];
            ++r.vstar_size;
        }
    }
    if (r.vstar_size == 0) throw NumericError("variance_match_constants: V* is empty");

    double overall = 0.0;
    for (std::size_t c = 0; c < classes; ++c) overall += sum[c];
    overall /= static_cast<double>(r.vstar_size);

    r.a2.assign(classes, overall);
    double worst = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
        if (cnt[c] == 0) continue;
        ++r.classes_used;
        r.a2[c] = sum[c] / static_cast<double>(cnt[c]);
        worst = std::min(worst, r.a2[c]);
    }
    if (worst < 0.0) {
        std::ostringstream msg;
        msg << "variance matching needs a larger alpha: deficit " << -worst << ", try alpha >= "
            << p.alpha - worst / 4.0;
        throw NumericError(msg.str());
    }
    r.a.resize(classes);
    for (std::size_t c = 0; c < classes; ++c) {
        r.a[c] = std::sqrt(r.a2[c]);
        r.max_a = std::max(r.max_a, r.a[c]);
    }
    r.bound = std::sqrt(8.0 * p.alpha);

    // Var S_v - Var psi_v - 4 alpha = a^2_{class} - target_v.
    double acc = 0.0;
    for (int y = 0; y < N; ++y) {
        for (int x = 0; x < N; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * N + x;
            if (!mask[idx]) continue;
            const double gap = std::abs(r.a2[p.residue({x, y})] - target[idx]);
            acc += gap;
            r.max_abs_gap = std::max(r.max_abs_gap, gap);
        }
    }
    r.mean_abs_gap = acc / static_cast<double>(r.vstar_size);
    return r;
}

}  // namespace lcgf
