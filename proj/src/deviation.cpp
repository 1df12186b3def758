#include "lcgf/deviation.hpp"

#include <algorithm>
#include <cmath>

#include "lcgf/brw_cov.hpp"
#include "lcgf/errors.hpp"
#include "lcgf/green.hpp"
#include "lcgf/psi.hpp"

namespace lcgf {

std::string to_string(CovModel m) {
    switch (m) {
        case CovModel::Dgff: return "dgff";
        case CovModel::Psi: return "psi";
        case CovModel::Mibrw: return "mibrw";
    }
    return "?";
}

CovModel cov_model_from_string(const std::string& s) {
    if (s == "dgff") return CovModel::Dgff;
    if (s == "psi") return CovModel::Psi;
    if (s == "mibrw") return CovModel::Mibrw;
    throw ConfigError("unknown covariance model '" + s + "'");
}

double log_target(const VarianceProfile& p, int N, double dist) {
    const double ln = std::log(static_cast<double>(N));
    const double lp = dist > 1.0 ? std::log(dist) : 0.0;
    return ln * p.I(std::clamp(1.0 - lp / ln, 0.0, 1.0));
}

std::vector<Vertex> bulk_vertices(const BoxSpec& spec, double delta) {
    std::vector<Vertex> out;
    for (std::int64_t i = 0; i < spec.volume(); ++i) {
        const Vertex v = spec.vertex(i);
        if (delta <= 0.0 || spec.in_bulk(v, delta)) out.push_back(v);
    }
    return out;
}

DeviationReport deviation_alpha(CovModel model, const VarianceProfile& p, const std::vector<int>& sides,
                                double delta) {
    if (sides.empty()) throw ConfigError("deviation_alpha: empty N list");
    DeviationReport rep;
    rep.model = to_string(model);
    rep.delta = delta;
    rep.formula = model == CovModel::Mibrw ? "ln N * I(1 - ln_+ d_torus(u,v) / ln N)"
                                           : "ln N * I(1 - ln_+ |u-v|_2 / ln N)";
    for (int N : sides) {
        const BoxSpec spec = BoxSpec::from_side(N);
        const auto vs = bulk_vertices(spec, delta);
        double best = -1.0;
        Vertex bu{}, bv{};
        auto consider = [&](std::size_t i, std::size_t j, double cov, double dist) {
            const double dev = std::abs(cov - log_target(p, N, dist));
            if (dev > best) {
                best = dev;
                bu = vs[i];
                bv = vs[j];
            }
        };
        auto planar = [&](std::size_t i, std::size_t j) {
            return std::hypot(static_cast<double>(vs[i].x - vs[j].x), static_cast<double>(vs[i].y - vs[j].y));
        };
        if (model == CovModel::Mibrw) {
            const auto w = level_weights(p, spec.n());
            for (std::size_t i = 0; i < vs.size(); ++i) {
                for (std::size_t j = i; j < vs.size(); ++j) {
                    consider(i, j, mibrw_cov(w, N, vs[i], vs[j]), torus_distance(vs[i], vs[j], N).euclid);
                }
            }
        } else {
            const CovarianceMatrix g = green_matrix(spec);
            CovarianceMatrix c;
            if (model == CovModel::Psi) {
                c = psi_covariance(PsiOperator(spec, p), g, vs);
            } else {
                c.index = vs;
                c.m.resize(static_cast<Eigen::Index>(vs.size()), static_cast<Eigen::Index>(vs.size()));
                for (std::size_t i = 0; i < vs.size(); ++i) {
                    for (std::size_t j = 0; j < vs.size(); ++j) {
                        c.m(i, j) = g.m(spec.index(vs[i]), spec.index(vs[j]));
                    }
                }
            }
            // For the DGFF the target is the sigma = 1 formula.
            const VarianceProfile& target = model == CovModel::Dgff ? VarianceProfile::constant() : p;
            for (std::size_t i = 0; i < vs.size(); ++i) {
                for (std::size_t j = i; j < vs.size(); ++j) {
                    const double dev = std::abs(c.m(i, j) - log_target(target, N, planar(i, j)));
                    if (dev > best) {
                        best = dev;
                        bu = vs[i];
                        bv = vs[j];
                    }
                }
            }
        }
        rep.sides.push_back(N);
        rep.sup.push_back(best);
        rep.arg_u.push_back(bu);
        rep.arg_v.push_back(bv);
    }
    rep.alpha_hat = *std::max_element(rep.sup.begin(), rep.sup.end());
    rep.growth = rep.sup.front() > 0.0 ? rep.sup.back() / rep.sup.front() - 1.0 : 0.0;
    return rep;
}

}  // namespace lcgf
