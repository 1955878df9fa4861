#pragma once

#include "conetest/matkit.hpp"

namespace conetest {

struct NnlsResult {
  Vector x;
  /// Positive-part set at termination (zero-based columns).
  std::vector<int> passive;
  int iterations = 0;
};

/// Lawson-Hanson active-set solution of min ||E x - f||^2 subject to x >= 0.
/// Throws SolverError after max_iterations inner or outer steps.
NnlsResult nnls(const Matrix& e, const Vector& f, int max_iterations = 1000);

}  // namespace conetest
