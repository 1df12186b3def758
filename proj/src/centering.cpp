#include "lcgf/centering.hpp"

#include <algorithm>
#include <cmath>

#include "lcgf/errors.hpp"

namespace lcgf {

double m_N(double N) {
    if (!(N > std::exp(1.0))) throw DomainError("m_N needs N > e");
    const double l = std::log(N);
    return 2.0 * l - std::log(l) / 4.0;
}

double M_n(const VarianceProfile& p, int n, double k, double t, int lbar) {
    if (n < 2) throw DomainError("M_n needs n >= 2");
    if (!(k >= 0 && k <= t && t <= n)) throw DomainError("M_n needs 0 <= k <= t <= n");
    if (lbar < 0 || lbar >= n) throw DomainError("M_n needs 0 <= lbar < n");
    const double drift = 2.0 * log_side(1) * p.I(k / n, t / n) * n;
    const double corr = std::min(t, static_cast<double>(n - lbar)) * std::log(static_cast<double>(n)) /
                        (4.0 * (n - lbar));
    return drift - corr;
}

double tube_half_width(double t, int n, double gamma) {
    const double i = std::max(0.0, std::min(t, n - t));
    return std::pow(i, gamma);
}

double tube_centre(const VarianceProfile& p, int n, double t) {
    return 2.0 * log_side(1) * p.I(std::clamp(t / n, 0.0, 1.0)) * n;
}

}  // namespace lcgf
