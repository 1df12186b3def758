#include "lcgf/continuum.hpp"

#include <cmath>
#include <limits>

#include "lcgf/errors.hpp"
#include "lcgf/green.hpp"
#include "lcgf/psi.hpp"

namespace lcgf {

ContinuumKernels continuum_kernels(int resolution, int m) {
    if (resolution < 32) throw DomainError("continuum_kernels: resolution must be >= 32");
    if (m < 1) throw DomainError("continuum_kernels: grid size must be positive");
    ContinuumKernels ck;
    ck.resolution = resolution;
    ck.m = m;
    const int R = resolution;
    const Rect box{0, R - 1, 0, R - 1};
    const double scale = R - 1.0;
    std::vector<Vertex> lat(static_cast<std::size_t>(m) * m);
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < m; ++i) {
            lat[static_cast<std::size_t>(j) * m + i] = {static_cast<int>(std::lround(ck.point(i) * scale)),
                                                       static_cast<int>(std::lround(ck.point(j) * scale))};
        }
    }
    const std::size_t P = lat.size();
    ck.f.assign(P, 0.0);
    ck.h.assign(P * P, std::numeric_limits<double>::quiet_NaN());
    auto dist = [scale](Vertex a, Vertex b) {
        return std::hypot(static_cast<double>(a.x - b.x), static_cast<double>(a.y - b.y)) / scale;
    };
    for (std::size_t p = 0; p < P; ++p) {
        const HarmonicKernel k = harmonic_kernel(box, lat[p]);
        double f = 0.0;
        for (const auto& [z, w] : k.weights) f += w * std::log(dist(z, lat[p]));
        ck.f[p] = f;
        for (std::size_t q = 0; q < P; ++q) {
            if (q == p) continue;
            double s = 0.0;
            for (const auto& [z, w] : k.weights) s += w * std::log(dist(z, lat[q]));
            ck.h[p * P + q] = -std::log(dist(lat[p], lat[q])) + s;
        }
    }
    return ck;
}

double near_diagonal_residual(const VarianceProfile& p, int N, Vertex x, Vertex u, Vertex v, double f_x) {
    const BoxSpec spec = BoxSpec::from_side(N);
    const PsiOperator op(spec, p);
    const Vertex a{x.x + u.x, x.y + u.y};
    const Vertex b{x.x + v.x, x.y + v.y};
    const double cov = psi_covariance_row(op, a, {b})[0];
    const double s0 = p.sigma0();
    return cov - std::log(static_cast<double>(N)) - s0 * s0 * f_x;
}

}  // namespace lcgf
