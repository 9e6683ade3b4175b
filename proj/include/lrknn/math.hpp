#pragma once

#include <cmath>
#include <limits>

#include "lrknn/common.hpp"

namespace lrknn {

inline constexpr double inv_sqrt_2pi = 0.39894228040143267794; // 1/sqrt(2*pi)

/// Logistic function, stable for large |x|.
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// log(1 + exp(x)) without overflow.
inline double log1pexp(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

/// Standard normal density.
inline double normal_pdf(double x) { return inv_sqrt_2pi * std::exp(-0.5 * x * x); }

namespace detail {

// Lower regularized incomplete gamma P(a,x) by series expansion.
// Converges fast for x < a+1.
inline double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double term = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper regularized incomplete gamma Q(a,x) by continued fraction
// (modified Lentz). Converges fast for x >= a+1.
inline double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

} // namespace detail

/// Upper regularized incomplete gamma Q(a,x) = Gamma(a,x)/Gamma(a).
/// Series for x < a+1, continued fraction otherwise.
inline double regularized_gamma_q(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw domain_error("math", "regularized_gamma_q: invalid arguments");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
  return detail::gamma_q_cf(a, x);
}

/// P(X > x) for a chi-square variable with df degrees of freedom.
inline double chi_square_upper_tail(double x, double df) {
  if (x <= 0.0) return 1.0;
  return regularized_gamma_q(0.5 * df, 0.5 * x);
}

} // namespace lrknn
