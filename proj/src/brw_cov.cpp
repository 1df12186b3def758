#include "lcgf/brw_cov.hpp"

#include <algorithm>
#include <cmath>

#include "lcgf/errors.hpp"

namespace lcgf {

std::vector<double> level_weights(const VarianceProfile& p, int n) {
    if (n < 1) throw DomainError("level_weights needs n >= 1");
    std::vector<double> w(n);
    const double s = std::sqrt(std::log(2.0));
    for (int k = 0; k < n; ++k) {
        const double a = static_cast<double>(n - k - 1) / n;
        const double b = static_cast<double>(n - k) / n;
        w[k] = s * n * p.integral_sigma(a, b);
    }
    return w;
}

double ibrw_cov(const std::vector<double>& w, Vertex u, Vertex v) {
    double total = 0.0;
    for (int k = 0; k < static_cast<int>(w.size()); ++k) {
        if ((u.x >> k) == (v.x >> k) && (u.y >> k) == (v.y >> k)) total += w[k] * w[k];
    }
    return total;
}

double ibrw_cov(const VarianceProfile& p, int n, Vertex u, Vertex v) {
    return ibrw_cov(level_weights(p, n), u, v);
}

int torus_window_overlap(int side, int d, int M) {
    if (side >= M) return M;
    return std::max(0, side - d) + std::max(0, side - (M - d));
}

double mibrw_cov(const std::vector<double>& w, int N, Vertex u, Vertex v, int first_level) {
    const int dx = torus_axis_distance(u.x, v.x, N);
    const int dy = torus_axis_distance(u.y, v.y, N);
    double total = 0.0;
    for (int k = first_level; k < static_cast<int>(w.size()); ++k) {
        const int side = 1 << k;
        const int cx = torus_window_overlap(side, dx, N);
        const int cy = torus_window_overlap(side, dy, N);
        if (cx == 0 || cy == 0) continue;
        // Squares of side >= N cover the whole torus: N positions per axis.
        const double per_axis = std::min(side, N);
        total += w[k] * w[k] * (static_cast<double>(cx) * cy) / (per_axis * per_axis);
    }
    return total;
}

double mibrw_cov(const VarianceProfile& p, int n, Vertex u, Vertex v) {
    return mibrw_cov(level_weights(p, n), 1 << n, u, v);
}

}  // namespace lcgf
