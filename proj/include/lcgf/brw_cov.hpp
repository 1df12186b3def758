#pragma once

#include <vector>

#include "lcgf/lattice.hpp"
#include "lcgf/profile.hpp"

namespace lcgf {

// w_k = sqrt(ln 2) * int_{n-k-1}^{n-k} sigma(s/n) ds for levels k = 0..n-1.
// Level k uses boxes of side 2^k, so k = n-1 is the coarsest level.
std::vector<double> level_weights(const VarianceProfile& p, int n);

// IBRW: one Gaussian per dyadic box; u and v share level k iff they lie in
// the same box of side 2^k.
double ibrw_cov(const std::vector<double>& w, Vertex u, Vertex v);
double ibrw_cov(const VarianceProfile& p, int n, Vertex u, Vertex v);

// MIBRW: level k averages 2^{2k} periodized white-noise squares of side 2^k;
// the covariance counts squares containing both points on the torus.
// w may be longer than log2 N (levels whose squares wrap the whole torus);
// levels below first_level are skipped.
double mibrw_cov(const std::vector<double>& w, int N, Vertex u, Vertex v, int first_level = 0);

// Number of positions (per axis, on Z/MZ) of a window of length `side`
// containing two points at torus distance d.
int torus_window_overlap(int side, int d, int M);
double mibrw_cov(const VarianceProfile& p, int n, Vertex u, Vertex v);

}  // namespace lcgf
