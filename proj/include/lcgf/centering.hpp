#pragma once

#include "lcgf/profile.hpp"

namespace lcgf {

// ln N for N = 2^n. Natural-log formulas and level-indexed ones meet here.
inline double log_side(int n) { return n * 0.69314718055994530942; }

// m_N = 2 ln N - ln ln N / 4. Throws DomainError for N <= e.
double m_N(double N);

// M_n(k, t) = 2 ln2 I(k/n, t/n) n - min(t, n - lbar) ln n / (4 (n - lbar)),
// for k <= t <= n and 0 <= lbar < n. M_n(0, n) differs from m_N(2^n) by the
// constant ln(ln 2) / 4 (the ln ln N term counted in base-2 levels).
double M_n(const VarianceProfile& p, int n, double k, double t, int lbar = 0);

// Tube half-width i(t, n)^gamma with i(t, n) = min(t, n - t).
double tube_half_width(double t, int n, double gamma);
// Tube centre 2 ln2 I(t/n) n.
double tube_centre(const VarianceProfile& p, int n, double t);

}  // namespace lcgf
