#pragma once

#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lcgf/lattice.hpp"

namespace lcgf {

// Dense covariance over an explicit vertex list.
struct CovarianceMatrix {
    std::vector<Vertex> index;
    Eigen::MatrixXd m;

    [[nodiscard]] std::size_t dim() const { return index.size(); }
    // Smallest eigenvalue >= -1e-8 * trace / dim.
    [[nodiscard]] bool is_psd() const;
    [[nodiscard]] bool is_symmetric(double tol = 1e-12) const;
};

// Green function of the walk killed outside an a x b rectangle of interior
// sites, by the discrete sine expansion. Local coordinates run 1..a, 1..b;
// values carry the pi/2 normalization.
class RectGreen {
public:
    RectGreen(int a, int b);

    [[nodiscard]] int a() const { return a_; }
    [[nodiscard]] int b() const { return b_; }

    [[nodiscard]] double operator()(int px, int py, int qx, int qy) const;
    // G(p, .) over all sites, local row-major ((qy - 1) * a + qx - 1).
    [[nodiscard]] std::vector<double> row(int px, int py) const;
    // Diagonal over all sites, same layout; O(ab(a+b)).
    [[nodiscard]] std::vector<double> diagonal() const;
    // Full matrix, same layout on both axes; O(a^3 b^2).
    [[nodiscard]] Eigen::MatrixXd dense() const;

    // Exit distribution from local site p onto the ring around the rectangle.
    // Entries are (local x, local y, weight) with ring coordinates 0 or a+1 / b+1;
    // corner sites are never hit and are omitted.
    struct RingWeight {
        int x;
        int y;
        double w;
    };
    [[nodiscard]] std::vector<RingWeight> exit_distribution(int px, int py) const;

private:
    [[nodiscard]] double mu(int j, int k) const { return 1.0 - 0.5 * (cx_[j] + cy_[k]); }

    int a_, b_;
    // sx_[j * a + x]: sqrt(2/(a+1)) sin((j+1)(x+1) pi / (a+1)), zero-based j, x.
    std::vector<double> sx_, sy_, cx_, cy_;
};

// G_{V_N} over all N^2 vertices (index order BoxSpec::index), zero on the
// boundary. Throws SizeError above N = max_side.
CovarianceMatrix green_matrix(const BoxSpec& spec, int max_side = 64);
// Same for any side N >= 3 (index y * N + x); V_3 is the one-site example.
CovarianceMatrix green_matrix(int N, int max_side = 64);

// Reference route: (pi/2) (I - P)^{-1} from a dense LU of the absorbing chain.
// Only meant for small boxes and tests.
CovarianceMatrix green_matrix_linear_solve(int N);

struct HarmonicKernel {
    Vertex source;
    Rect box;
    std::vector<std::pair<Vertex, double>> weights;  // global coordinates

    [[nodiscard]] double total() const;
};

// Exit distribution of the walk from v out of box.interior() onto the ring of
// box. A point mass at v when v is not in the interior (including box = {v}).
HarmonicKernel harmonic_kernel(const Rect& box, Vertex v);

// Process-wide cache of RectGreen tables keyed by (a, b).
std::shared_ptr<const RectGreen> rect_green(int a, int b);

}  // namespace lcgf
