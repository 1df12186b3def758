#pragma once

#include <vector>

#include "lcgf/lattice.hpp"
#include "lcgf/profile.hpp"

namespace lcgf {

// Tabulated continuum kernels on the unit square, from the exit distribution
// of a walk in V_R (R = resolution):
//   f(x)    = int Pi(x, dz) ln|z - x|
//   h(x, y) = -ln|x - y| + int Pi(x, dz) ln|z - y|
// on the grid points ((i+1)/(m+1), (j+1)/(m+1)), i, j < m.
struct ContinuumKernels {
    int resolution = 0;
    int m = 0;
    std::vector<double> f;  // [j * m + i]
    std::vector<double> h;  // [p * m^2 + q], p, q grid indices; NaN on the diagonal

    [[nodiscard]] double point(int i) const { return (i + 1.0) / (m + 1.0); }
    [[nodiscard]] double f_at(int i, int j) const { return f[static_cast<std::size_t>(j) * m + i]; }
    [[nodiscard]] double h_at(int p, int q) const {
        return h[static_cast<std::size_t>(p) * m * m + q];
    }
};

// Throws DomainError for resolution < 32.
ContinuumKernels continuum_kernels(int resolution, int m = 7);

// Near-diagonal residual Cov(psi_{xN+u}, psi_{xN+v}) - ln N - sigma(0)^2 f(x):
// divided by sigma(1)^2 this is the estimate of g(u, v) at size N.
double near_diagonal_residual(const VarianceProfile& p, int N, Vertex x_lattice, Vertex u, Vertex v,
                              double f_x);

}  // namespace lcgf
