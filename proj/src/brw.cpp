#include "lcgf/brw.hpp"

#include "lcgf/brw_cov.hpp"
#include "lcgf/errors.hpp"

namespace lcgf {

IbrwSampler::IbrwSampler(const VarianceProfile& p, int n) : n_(n), w_(level_weights(p, n)) {}

void IbrwSampler::sample(RngStream& rng, std::vector<double>& out, Trajectories* traj) const {
    const int N = 1 << n_;
    const std::size_t vol = static_cast<std::size_t>(N) * N;
    out.assign(vol, 0.0);
    if (traj) {
        traj->levels = n_;
        traj->data.assign(vol * n_, 0.0);
    }
    std::vector<double> noise;
    for (int t = 1; t <= n_; ++t) {
        const int k = n_ - t;
        const int boxes = N >> k;
        noise.resize(static_cast<std::size_t>(boxes) * boxes);
        for (double& z : noise) z = w_[k] * rng.normal();
        for (int y = 0; y < N; ++y) {
            const double* row = &noise[static_cast<std::size_t>(y >> k) * boxes];
            double* o = &out[static_cast<std::size_t>(y) * N];
            for (int x = 0; x < N; ++x) o[x] += row[x >> k];
        }
        if (traj) std::copy(out.begin(), out.end(), traj->data.begin() + static_cast<std::ptrdiff_t>((t - 1) * vol));
    }
}

namespace {
// Cyclic window sums of length s < M ending at each index:
// out[i] = sum_{d<s} in[i-d mod M].
void row_window_sum(const double* in, double* out, int M, int s, std::vector<double>& pre) {
    pre.resize(static_cast<std::size_t>(M) + 1);
    pre[0] = 0.0;
    for (int i = 0; i < M; ++i) pre[i + 1] = pre[i] + in[i];
    for (int i = 0; i < M; ++i) {
        const int lo = i + 1 - s;
        out[i] = lo >= 0 ? pre[i + 1] - pre[lo] : pre[i + 1] + (pre[M] - pre[M + lo]);
    }
}
}  // namespace

void mibrw_torus(int M, const std::vector<double>& w, int j_lo, int j_hi, RngStream& rng,
                 std::vector<double>& out, Trajectories* traj) {
    if (j_lo < 0 || j_hi >= static_cast<int>(w.size()) || j_lo > j_hi) {
        throw ConfigError("mibrw_torus: level range outside the weight table");
    }
    const std::size_t vol = static_cast<std::size_t>(M) * M;
    const auto row = [M](std::vector<double>& v, int y) { return v.data() + static_cast<std::size_t>(y) * M; };
    out.assign(vol, 0.0);
    const int levels = j_hi - j_lo + 1;
    if (traj) {
        traj->levels = levels;
        traj->data.assign(vol * levels, 0.0);
    }
    std::vector<double> noise(vol), rows(vol), acc(M), pre;
    for (int t = 1; t <= levels; ++t) {
        const int j = j_hi - t + 1;
        const int side = 1 << j;
        for (double& z : noise) z = rng.normal();
        // Squares of side >= M cover the whole torus: every position sees the total.
        const double f = w[j] / (side >= M ? M : side);
        if (side >= M) {
            double tot = 0.0;
            for (double z : noise) tot += z;
            for (double& o : out) o += f * tot;
        } else {
            for (int y = 0; y < M; ++y) row_window_sum(row(noise, y), row(rows, y), M, side, pre);
            // Column pass as a sliding sum of whole rows (contiguous).
            std::fill(acc.begin(), acc.end(), 0.0);
            for (int d = 0; d < side; ++d) {
                const double* r = row(rows, (M - d) % M);
                for (int x = 0; x < M; ++x) acc[x] += r[x];
            }
            for (int y = 0; y < M; ++y) {
                if (y > 0) {
                    const double* add = row(rows, y);
                    const double* sub = row(rows, (y - side + M) % M);
                    for (int x = 0; x < M; ++x) acc[x] += add[x] - sub[x];
                }
                double* o = row(out, y);
                for (int x = 0; x < M; ++x) o[x] += f * acc[x];
            }
        }
        if (traj) std::copy(out.begin(), out.end(), traj->data.begin() + static_cast<std::ptrdiff_t>((t - 1) * vol));
    }
}

MibrwSampler::MibrwSampler(const VarianceProfile& p, int n) : n_(n), w_(level_weights(p, n)) {}

void MibrwSampler::sample(RngStream& rng, std::vector<double>& out, Trajectories* traj) const {
    mibrw_torus(1 << n_, w_, 0, n_ - 1, rng, out, traj);
}

}  // namespace lcgf
