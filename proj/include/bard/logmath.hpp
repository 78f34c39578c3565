#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace bard {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

inline double log_sum_exp(std::span<const double> values) {
  double hi = kNegInf;
  for (double v : values) hi = std::max(hi, v);
  if (!std::isfinite(hi)) return hi;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - hi);
  return hi + std::log(sum);
}

// log(1 - exp(x)) for x <= 0.
inline double log1m_exp(double x) {
  if (x >= 0.0) return kNegInf;
  return x > -0.6931471805599453 ? std::log(-std::expm1(x)) : std::log1p(-std::exp(x));
}

}  // namespace bard
