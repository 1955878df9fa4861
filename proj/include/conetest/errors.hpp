#pragma once

#include <stdexcept>
#include <string>

namespace conetest {

/// Precondition on an argument failed (bad dimension, empty index set, alpha outside (0,1), ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A matrix block that must be inverted is numerically singular.
class ConditioningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cholesky factorization hit a pivot at or below tolerance.
class NotPositiveDefinite : public ConditioningError {
 public:
  NotPositiveDefinite(const std::string& what, int pivot)
      : ConditioningError(what), pivot_(pivot) {}
  /// Zero-based index of the offending pivot.
  int pivot() const noexcept { return pivot_; }

 private:
  int pivot_;
};

/// Iterative solver exceeded its budget or failed its optimality certificate.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Quadrature, root finding or an internal cross-check did not meet tolerance.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace conetest
