#pragma once

#include <cmath>

#include "conetest/errors.hpp"

namespace conetest {

template <class Tail>
double solve_critical(Tail tail, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("critical value: alpha must lie in (0, 1)");
  double lo = 0.0;
  double hi = 1.0;
  int doublings = 0;
  while (tail(hi) > alpha) {
    lo = hi;
    hi *= 2.0;
    if (++doublings > 200) throw NumericalError("critical value: no upper bracket found");
  }
  // Invariant: tail(lo) > alpha or lo == 0; tail(hi) <= alpha.
  for (int it = 0; it < 200 && hi - lo > 1e-12 * (1.0 + hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (tail(mid) > alpha) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

}  // namespace conetest
