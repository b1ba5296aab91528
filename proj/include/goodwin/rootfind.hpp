#pragma once
// Bracketed scalar root-finding: bisection down to a width floor, then a few
// Newton polish iterations clamped to the surviving bracket.  Monotone curve
// inversions throughout the project (phi_inv fallbacks, level-set roots, the
// rest-point equation) all run through these two helpers.

#include <cmath>
#include <string>
#include <utility>

#include "goodwin/errors.hpp"

namespace goodwin {

struct RootOptions {
  double width = 1e-13;        // absolute bracket-width stopping threshold
  int max_bisect = 200;        // hard cap on bisection iterations
  int newton_iters = 5;        // polish budget (used when a derivative exists)
  double residual_target = 0;  // optional |f| stopping level for the polish
};

// Bisection on [lo, hi]; f(lo) and f(hi) must have opposite (or zero) signs.
template <class F>
double bisect(F&& f, double lo, double hi, const RootOptions& opts = {}) {
  double flo = f(lo), fhi = f(hi);
  if (flo == 0) return lo;
  if (fhi == 0) return hi;
  if (std::signbit(flo) == std::signbit(fhi))
    throw NumericalError("bisect: root not bracketed on [" + std::to_string(lo) +
                         ", " + std::to_string(hi) + "]");
  for (int i = 0; i < opts.max_bisect; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= opts.width || mid == lo || mid == hi) break;
    const double fm = f(mid);
    if (fm == 0) return mid;
    if (std::signbit(fm) == std::signbit(flo)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Bisection followed by Newton polish.  The polish never leaves [lo, hi]; a
// step that would escape, or that fails to reduce |f|, is discarded.
template <class F, class DF>
double bisect_newton(F&& f, DF&& df, double lo, double hi,
                     const RootOptions& opts = {}) {
  double x = bisect(f, lo, hi, opts);
  double fx = f(x);
  for (int i = 0; i < opts.newton_iters; ++i) {
    if (std::abs(fx) <= opts.residual_target) break;
    const double d = df(x);
    if (d == 0 || !std::isfinite(d)) break;
    const double x_next = x - fx / d;
    if (!(x_next >= lo && x_next <= hi)) break;
    const double f_next = f(x_next);
    if (!(std::abs(f_next) < std::abs(fx))) break;
    x = x_next;
    fx = f_next;
  }
  return x;
}

}  // namespace goodwin
