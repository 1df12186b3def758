#pragma once

#include <string>
#include <vector>

#include "lcgf/lattice.hpp"
#include "lcgf/profile.hpp"

namespace lcgf {

enum class CovModel { Dgff, Psi, Mibrw };

std::string to_string(CovModel m);
CovModel cov_model_from_string(const std::string& s);

// ln N * I(1 - ln_+ d / ln N), the common log-correlated target.
double log_target(const VarianceProfile& p, int N, double dist);

struct DeviationReport {
    std::string model;
    std::string formula;
    double delta = 0.0;
    std::vector<int> sides;
    std::vector<double> sup;            // per N
    std::vector<Vertex> arg_u, arg_v;   // pair achieving sup, per N
    double alpha_hat = 0.0;             // max over N
    double growth = 0.0;                // sup(last N) / sup(first N) - 1
};

// Sup over pairs u, v in V_N^delta (all of V_N when delta = 0) of
// |Cov - target|. DGFF and psi use exact dense covariances (N <= 64); the
// MIBRW uses its closed form with torus distance.
DeviationReport deviation_alpha(CovModel model, const VarianceProfile& p, const std::vector<int>& sides,
                                double delta);

std::vector<Vertex> bulk_vertices(const BoxSpec& spec, double delta);

}  // namespace lcgf
