#include "lcgf/psi.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include "lcgf/errors.hpp"

namespace lcgf {

PsiOperator::PsiOperator(const BoxSpec& spec, const VarianceProfile& profile)
    : spec_(spec), sigmas_(profile.step_sigmas()), scales_(profile.step_scales()) {
    const int M = static_cast<int>(sigmas_.size());
    const int N = spec_.side();
    self_coeff_ = sigmas_.back();
    std::map<std::tuple<int, int, int, int>, int> lookup;
    for (int i = 1; i < M; ++i) {
        const double c = sigmas_[i - 1] - sigmas_[i];
        const int h = scale_half_width(N, scales_[i]);
        if (h == 0) {
            self_coeff_ += c;  // [v]_l = {v}: phi_v(l) = phi_v
            continue;
        }
        half_widths_.push_back(h);
        scale_coeff_.push_back(c);
        std::vector<std::int32_t> ids(static_cast<std::size_t>(spec_.volume()));
        for (std::int64_t idx = 0; idx < spec_.volume(); ++idx) {
            const Vertex v = spec_.vertex(idx);
            const Rect box = scale_box(v, scales_[i], spec_);
            const auto key = std::make_tuple(v.x - box.x0, box.x1 - v.x, v.y - box.y0, box.y1 - v.y);
            auto it = lookup.find(key);
            if (it == lookup.end()) it = lookup.emplace(key, kernel_for(v, box)).first;
            ids[idx] = it->second;
        }
        kernel_id_.push_back(std::move(ids));
    }
}

int PsiOperator::kernel_for(Vertex v, const Rect& box) {
    Kernel k;
    const Rect in = box.interior();
    if (in.contains(v)) {
        const auto g = rect_green(in.width(), in.height());
        const int px = v.x - in.x0 + 1;
        const int py = v.y - in.y0 + 1;
        for (const auto& r : g->exit_distribution(px, py)) {
            if (r.w != 0.0) k.terms.push_back({box.x0 + r.x - v.x, box.y0 + r.y - v.y, r.w});
        }
        k.g_inner = (*g)(px, py, px, py);
    }
    kernels_.push_back(std::move(k));
    return static_cast<int>(kernels_.size()) - 1;
}

SparseRow PsiOperator::row(Vertex v) const {
    SparseRow out;
    if (!spec_.is_interior(v)) return out;
    std::map<std::int64_t, double> acc;
    acc[spec_.index(v)] += self_coeff_;
    const std::int64_t idx = spec_.index(v);
    for (std::size_t s = 0; s < kernel_id_.size(); ++s) {
        const Kernel& k = kernels_[kernel_id_[s][idx]];
        if (k.terms.empty()) {
            acc[idx] += scale_coeff_[s];
            continue;
        }
        for (const Term& t : k.terms) {
            const Vertex z{v.x + t.dx, v.y + t.dy};
            if (!spec_.is_interior(z)) continue;
            acc[spec_.index(z)] += scale_coeff_[s] * t.w;
        }
    }
    out.assign(acc.begin(), acc.end());
    return out;
}

void PsiOperator::apply(const std::vector<double>& phi, std::vector<double>& psi) const {
    const int N = spec_.side();
    if (static_cast<std::int64_t>(phi.size()) != spec_.volume()) {
        throw DomainError("PsiOperator::apply: field size mismatch");
    }
    psi.assign(phi.size(), 0.0);
    for (int y = 1; y + 1 < N; ++y) {
        for (int x = 1; x + 1 < N; ++x) {
            const std::int64_t idx = static_cast<std::int64_t>(y) * N + x;
            double val = self_coeff_ * phi[idx];
            for (std::size_t s = 0; s < kernel_id_.size(); ++s) {
                const Kernel& k = kernels_[kernel_id_[s][idx]];
                if (k.terms.empty()) {
                    val += scale_coeff_[s] * phi[idx];
                    continue;
                }
                double avg = 0.0;
                for (const Term& t : k.terms) avg += t.w * phi[idx + static_cast<std::int64_t>(t.dy) * N + t.dx];
                val += scale_coeff_[s] * avg;
            }
            psi[idx] = val;
        }
    }
}

const std::vector<double>& PsiOperator::green_diagonal() const {
    std::call_once(diag_once_, [this] {
        const int N = spec_.side();
        diag_.assign(static_cast<std::size_t>(spec_.volume()), 0.0);
        if (N < 3) return;
        const auto inner = RectGreen(N - 2, N - 2).diagonal();
        for (int y = 1; y + 1 < N; ++y) {
            for (int x = 1; x + 1 < N; ++x) {
                diag_[spec_.index({x, y})] = inner[static_cast<std::size_t>(y - 1) * (N - 2) + x - 1];
            }
        }
    });
    return diag_;
}

double PsiOperator::variance(Vertex v) const {
    if (!spec_.is_interior(v)) return 0.0;
    const std::int64_t idx = spec_.index(v);
    const double gn = green_diagonal()[idx];
    // V(l) on the scale grid, skipping scales collapsed into the self term.
    const int M = static_cast<int>(sigmas_.size());
    double total = 0.0, prev = 0.0;
    std::size_t s = 0;
    const int N = spec_.side();
    for (int i = 1; i <= M; ++i) {
        double cur;
        if (i == M) {
            cur = gn;
        } else if (scale_half_width(N, scales_[i]) == 0) {
            cur = gn;
        } else {
            cur = gn - kernels_[kernel_id_[s][idx]].g_inner;
            ++s;
        }
        const double sg = sigmas_[i - 1];
        total += sg * sg * (cur - prev);
        prev = cur;
    }
    return total;
}

std::vector<double> PsiOperator::variances() const {
    std::vector<double> out(static_cast<std::size_t>(spec_.volume()));
    for (std::int64_t i = 0; i < spec_.volume(); ++i) out[i] = variance(spec_.vertex(i));
    return out;
}

LinearFunctionalMatrix psi_functional_matrix(const BoxSpec& spec, const VarianceProfile& profile,
                                             int max_side) {
    if (spec.side() > max_side) {
        throw SizeError("psi_functional_matrix: N = " + std::to_string(spec.side()) +
                        " exceeds the dense limit " + std::to_string(max_side) +
                        "; use psi sampling through PsiOperator");
    }
    PsiOperator op(spec, profile);
    LinearFunctionalMatrix out{spec, profile.step_scales(),
                               Eigen::MatrixXd::Zero(spec.volume(), spec.volume())};
    for (std::int64_t i = 0; i < spec.volume(); ++i) {
        for (const auto& [j, c] : op.row(spec.vertex(i))) out.A(i, j) = c;
    }
    return out;
}

CovarianceMatrix psi_covariance(const PsiOperator& op, const CovarianceMatrix& green,
                                const std::vector<Vertex>& vertices) {
    const std::int64_t vol = op.spec().volume();
    if (green.m.rows() != vol) throw DomainError("psi_covariance: Green matrix size mismatch");
    const std::size_t m = vertices.size();
    std::vector<SparseRow> rows(m);
    for (std::size_t i = 0; i < m; ++i) rows[i] = op.row(vertices[i]);
    // B = G A_S^T, one dense column per vertex.
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(vol, static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
        for (const auto& [z, c] : rows[i]) b.col(static_cast<Eigen::Index>(i)) += c * green.m.col(z);
    }
    CovarianceMatrix out{vertices, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m),
                                                        static_cast<Eigen::Index>(m))};
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i; j < m; ++j) {
            double s = 0.0;
            for (const auto& [z, c] : rows[i]) s += c * b(z, static_cast<Eigen::Index>(j));
            out.m(i, j) = s;
            out.m(j, i) = s;
        }
    }
    return out;
}

std::vector<double> psi_covariance_row(const PsiOperator& op, Vertex u, const std::vector<Vertex>& vs) {
    const BoxSpec& spec = op.spec();
    const int N = spec.side();
    const int a = N - 2;
    std::vector<double> out(vs.size(), 0.0);
    const SparseRow ru = op.row(u);
    if (ru.empty()) return out;
    const auto g = rect_green(a, a);
    // r = sum_z a_u(z) G(z, .), over interior sites in local layout.
    std::vector<double> r(static_cast<std::size_t>(a) * a, 0.0);
    for (const auto& [z, c] : ru) {
        const Vertex w = spec.vertex(z);
        const auto gr = g->row(w.x, w.y);
        for (std::size_t q = 0; q < r.size(); ++q) r[q] += c * gr[q];
    }
    for (std::size_t i = 0; i < vs.size(); ++i) {
        double s = 0.0;
        for (const auto& [z, c] : op.row(vs[i])) {
            const Vertex w = spec.vertex(z);
            s += c * r[static_cast<std::size_t>(w.y - 1) * a + w.x - 1];
        }
        out[i] = s;
    }
    return out;
}

}  // namespace lcgf
