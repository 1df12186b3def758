#pragma once

#include <cstdint>
#include <vector>

namespace lcgf {

struct Vertex {
    int x = 0;
    int y = 0;

    friend bool operator==(Vertex, Vertex) = default;
};

// Closed lattice rectangle [x0, x1] x [y0, y1]. Empty when x1 < x0 or y1 < y0.
struct Rect {
    int x0 = 0;
    int x1 = -1;
    int y0 = 0;
    int y1 = -1;

    [[nodiscard]] bool empty() const { return x1 < x0 || y1 < y0; }
    [[nodiscard]] int width() const { return empty() ? 0 : x1 - x0 + 1; }
    [[nodiscard]] int height() const { return empty() ? 0 : y1 - y0 + 1; }
    [[nodiscard]] std::int64_t size() const {
        return static_cast<std::int64_t>(width()) * height();
    }
    [[nodiscard]] bool contains(Vertex v) const {
        return v.x >= x0 && v.x <= x1 && v.y >= y0 && v.y <= y1;
    }
    // Rect minus its outer ring.
    [[nodiscard]] Rect interior() const { return {x0 + 1, x1 - 1, y0 + 1, y1 - 1}; }
    // True when v lies in the rect but not in its interior.
    [[nodiscard]] bool on_ring(Vertex v) const {
        return contains(v) && !interior().contains(v);
    }

    friend bool operator==(const Rect&, const Rect&) = default;
};

// V_N = {0..N-1}^2 with N = 2^n. delta is the boundary-margin fraction used
// by V_N^delta.
class BoxSpec {
public:
    explicit BoxSpec(int n, double delta = 0.0);

    static BoxSpec from_side(int N, double delta = 0.0);

    [[nodiscard]] int n() const { return n_; }
    [[nodiscard]] int side() const { return side_; }
    [[nodiscard]] double delta() const { return delta_; }
    [[nodiscard]] std::int64_t volume() const {
        return static_cast<std::int64_t>(side_) * side_;
    }

    [[nodiscard]] Rect bounds() const { return {0, side_ - 1, 0, side_ - 1}; }
    [[nodiscard]] bool contains(Vertex v) const { return bounds().contains(v); }
    [[nodiscard]] bool is_interior(Vertex v) const {
        return v.x >= 1 && v.x <= side_ - 2 && v.y >= 1 && v.y <= side_ - 2;
    }
    [[nodiscard]] bool is_boundary(Vertex v) const { return contains(v) && !is_interior(v); }
    // V_N^delta = (delta N, (1 - delta) N)^2, open interval.
    [[nodiscard]] bool in_bulk(Vertex v, double delta) const;
    [[nodiscard]] bool in_bulk(Vertex v) const { return in_bulk(v, delta_); }

    // Row-major vertex index: y * N + x.
    [[nodiscard]] std::int64_t index(Vertex v) const {
        return static_cast<std::int64_t>(v.y) * side_ + v.x;
    }
    [[nodiscard]] Vertex vertex(std::int64_t idx) const {
        return {static_cast<int>(idx % side_), static_cast<int>(idx / side_)};
    }

private:
    int n_;
    int side_;
    double delta_;
};

// Half-width of [v]_lambda: floor(N^{1-lambda} / 2), with lambda = 0 giving
// the whole box and lambda = 1 giving zero.
int scale_half_width(int N, double lambda);

// [v]_lambda: closed square of side N^{1-lambda} centred at v, cut to V_N.
// Throws DomainError when v is outside V_N or lambda outside [0, 1].
Rect scale_box(Vertex v, double lambda, const BoxSpec& spec);

struct TorusDistance {
    double euclid = 0.0;
    int sup = 0;
};

// Minimum over (N Z)^2 shifts of the Euclidean and sup distances.
TorusDistance torus_distance(Vertex u, Vertex v, int N);

// Per-axis torus displacement min(|d| mod N, N - |d| mod N).
int torus_axis_distance(int a, int b, int N);

// Regular partition of the N x N box into square cells of side `cell`.
struct Partition {
    int parent = 0;
    int cell = 0;
    std::vector<Vertex> corners;  // row-major (y, then x)

    [[nodiscard]] int cells_per_side() const { return parent / cell; }
    [[nodiscard]] std::size_t cell_index(Vertex v) const {
        return static_cast<std::size_t>(v.y / cell) * cells_per_side() + v.x / cell;
    }
    [[nodiscard]] Vertex corner_of(Vertex v) const {
        return {v.x - v.x % cell, v.y - v.y % cell};
    }
    [[nodiscard]] Rect cell_rect(std::size_t i) const {
        const Vertex c = corners.at(i);
        return {c.x, c.x + cell - 1, c.y, c.y + cell - 1};
    }
};

// Throws ConfigError unless cell >= 1 divides parent.
Partition make_partition(int parent, int cell);

// B^delta: vertices of a cell at distance >= delta * side from the sites just
// outside the cell. Per axis this removes at most 2 * delta * side rows, which
// is what makes |V*| >= (1 - 16 delta) |V_N| hold for every delta.
bool in_shrunk_cell(Vertex v, int cell, double delta);

// V*_{N,delta}: intersection of the delta-shrunk unions for the partitions
// with sides N/L, N/(KL), L and KL. Returns a membership mask indexed by
// BoxSpec::index. Every side must be an integer >= 2.
std::vector<std::uint8_t> restricted_set(const BoxSpec& spec, int K, int L, double delta);

std::int64_t count_members(const std::vector<std::uint8_t>& mask);

bool is_power_of_two(std::int64_t x);
int log2_exact(std::int64_t x);

}  // namespace lcgf
