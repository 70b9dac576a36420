#pragma once

#include <cmath>
#include <stdexcept>

namespace osa {

// Solve f(x) = target on [lo, hi] for monotone f by bisection.
// Works for increasing and decreasing f; |f(x) - target| <= tol at the result
// or the bracket has collapsed to machine resolution.
template <typename F>
double invert_monotone(F&& f, double target, double lo, double hi,
                       double tol = 1e-12) {
  if (!(lo <= hi)) throw std::invalid_argument("invert_monotone: lo > hi");
  double flo = f(lo);
  double fhi = f(hi);
  const bool increasing = flo <= fhi;
  if (increasing ? (target < flo - tol || target > fhi + tol)
                 : (target > flo + tol || target < fhi - tol)) {
    throw std::domain_error("invert_monotone: target not bracketed");
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // bracket exhausted
    const double fm = f(mid);
    if (std::fabs(fm - target) <= tol) return mid;
    if ((fm < target) == increasing)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace osa
