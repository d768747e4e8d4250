#pragma once

#include <boost/math/tools/toms748_solve.hpp>

#include <cmath>
#include <cstdint>
#include <limits>

#include "bargaining/error.hpp"

namespace bargaining::detail {

// Bracketed scalar root of a monotone-or-continuous function on [lo, hi] with
// f(lo), f(hi) of opposite sign (or one of them zero). Returns the midpoint of
// the final bracket, so jump discontinuities converge to the jump location.
template <class F>
double bracketed_root(F&& f, double lo, double hi, double f_lo, double f_hi, int max_iter,
                      double abs_tol = 0.0) {
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  if ((f_lo > 0.0) == (f_hi > 0.0)) {
    throw Error(ErrorKind::Bracket, "root not bracketed");
  }
  const auto tol = [abs_tol](double a, double b) {
    const double width = std::abs(b - a);
    return width <= abs_tol ||
           width <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(a), std::abs(b));
  };
  std::uintmax_t iters = static_cast<std::uintmax_t>(max_iter);
  const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, f_lo, f_hi, tol, iters);
  return 0.5 * (a + b);
}

inline double median3(double a, double b, double c) {
  return std::max(std::min(a, b), std::min(std::max(a, b), c));
}

}  // namespace bargaining::detail
