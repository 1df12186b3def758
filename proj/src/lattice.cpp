#include "lcgf/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lcgf/errors.hpp"

namespace lcgf {

bool is_power_of_two(std::int64_t x) { return x > 0 && (x & (x - 1)) == 0; }

int log2_exact(std::int64_t x) {
    if (!is_power_of_two(x)) {
        throw ConfigError("expected a power of two, got " + std::to_string(x));
    }
    int k = 0;
    while ((std::int64_t{1} << k) < x) ++k;
    return k;
}

BoxSpec::BoxSpec(int n, double delta) : n_(n), side_(0), delta_(delta) {
    if (n < 1 || n > 20) throw ConfigError("box exponent n must lie in [1, 20]");
    if (!(delta >= 0.0 && delta < 0.5)) throw ConfigError("delta must lie in [0, 1/2)");
    side_ = 1 << n;
}

BoxSpec BoxSpec::from_side(int N, double delta) { return BoxSpec(log2_exact(N), delta); }

bool BoxSpec::in_bulk(Vertex v, double delta) const {
    const double lo = delta * side_;
    const double hi = (1.0 - delta) * side_;
    return v.x > lo && v.x < hi && v.y > lo && v.y < hi;
}

int scale_half_width(int N, double lambda) {
    if (lambda <= 0.0) return N;
    if (lambda >= 1.0) return 0;
    const double side = std::pow(static_cast<double>(N), 1.0 - lambda);
    // Relative slack absorbs pow() rounding at exact powers (16^{3/4} = 8).
    return static_cast<int>(std::floor(side / 2.0 * (1.0 + 1e-12)));
}

Rect scale_box(Vertex v, double lambda, const BoxSpec& spec) {
    if (!spec.contains(v)) throw DomainError("scale_box: vertex outside V_N");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError("scale_box: lambda outside [0, 1]");
    if (lambda == 0.0) return spec.bounds();
    if (lambda == 1.0) return {v.x, v.x, v.y, v.y};
    const int h = scale_half_width(spec.side(), lambda);
    const int last = spec.side() - 1;
    return {std::max(0, v.x - h), std::min(last, v.x + h), std::max(0, v.y - h),
            std::min(last, v.y + h)};
}

int torus_axis_distance(int a, int b, int N) {
    int d = std::abs(a - b) % N;
    return std::min(d, N - d);
}

TorusDistance torus_distance(Vertex u, Vertex v, int N) {
    const int dx = torus_axis_distance(u.x, v.x, N);
    const int dy = torus_axis_distance(u.y, v.y, N);
    return {std::hypot(static_cast<double>(dx), static_cast<double>(dy)), std::max(dx, dy)};
}

Partition make_partition(int parent, int cell) {
    if (cell < 1 || parent < cell || parent % cell != 0) {
        throw ConfigError("partition cell side " + std::to_string(cell) +
                          " does not divide " + std::to_string(parent));
    }
    Partition p{parent, cell, {}};
    const int m = parent / cell;
    p.corners.reserve(static_cast<std::size_t>(m) * m);
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < m; ++i) p.corners.push_back({i * cell, j * cell});
    }
    return p;
}

bool in_shrunk_cell(Vertex v, int cell, double delta) {
    const int px = v.x % cell;
    const int py = v.y % cell;
    // Distance to the nearest site outside the cell.
    const int dist = std::min({px + 1, cell - px, py + 1, cell - py});
    return static_cast<double>(dist) >= delta * cell;
}

std::vector<std::uint8_t> restricted_set(const BoxSpec& spec, int K, int L, double delta) {
    const int N = spec.side();
    if (K < 1 || L < 1) throw ConfigError("restricted_set: K and L must be positive");
    if (!(delta >= 0.0 && delta < 0.5)) throw ConfigError("restricted_set: delta outside [0, 1/2)");
    const std::int64_t KL = static_cast<std::int64_t>(K) * L;
    if (N % KL != 0) throw ConfigError("restricted_set: K*L does not divide N");
    const int sides[4] = {N / L, static_cast<int>(N / KL), L, static_cast<int>(KL)};
    for (int s : sides) {
        if (s < 2 || N % s != 0) {
            throw ConfigError("restricted_set: box side " + std::to_string(s) +
                              " is not an integer >= 2 dividing N");
        }
    }
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(spec.volume()), 0);
    for (int y = 0; y < N; ++y) {
        for (int x = 0; x < N; ++x) {
            const Vertex v{x, y};
            bool keep = true;
            for (int s : sides) keep = keep && in_shrunk_cell(v, s, delta);
            mask[static_cast<std::size_t>(spec.index(v))] = keep ? 1 : 0;
        }
    }
    return mask;
}

std::int64_t count_members(const std::vector<std::uint8_t>& mask) {
    return std::count(mask.begin(), mask.end(), std::uint8_t{1});
}

}  // namespace lcgf
