#pragma once

#include <cmath>
#include <stdexcept>

namespace osa {

namespace detail {

// series expansion of P(a,x), converges fast for x < a+1
inline double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < 10000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-17) break;
  }
  return sum * std::exp(a * std::log(x) - x - std::lgamma(a));
}

// continued fraction for Q(a,x) = 1 - P(a,x), modified Lentz
inline double gamma_q_contfrac(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-17) break;
  }
  return h * std::exp(a * std::log(x) - x - std::lgamma(a));
}

}  // namespace detail

// Regularized lower incomplete gamma P(a,x) = (1/Gamma(a)) int_0^x t^{a-1}e^{-t} dt.
inline double reg_gamma_lower(double shape, double x) {
  if (!(shape > 0.0)) throw std::domain_error("reg_gamma_lower: shape must be > 0");
  if (x < 0.0) throw std::domain_error("reg_gamma_lower: x must be >= 0");
  if (x == 0.0) return 0.0;
  if (x < shape + 1.0) return detail::gamma_p_series(shape, x);
  const double q = detail::gamma_q_contfrac(shape, x);
  return q >= 1.0 ? 0.0 : 1.0 - q;
}

}  // namespace osa
