#include "conetest/nnls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "conetest/errors.hpp"

namespace conetest {

namespace {

Vector solve_passive(const Matrix& e, const Vector& f, const std::vector<int>& passive) {
  const Matrix ep = e(Eigen::all, passive);
  return ep.colPivHouseholderQr().solve(f);
}

}  // namespace

NnlsResult nnls(const Matrix& e, const Vector& f, int max_iterations) {
  const int p = static_cast<int>(e.cols());
  if (e.rows() != f.size()) throw DomainError("nnls: row mismatch between E and f");

  NnlsResult res;
  res.x = Vector::Zero(p);
  std::vector<bool> in_passive(p, false);
  std::vector<int>& passive = res.passive;

  const double tol = 1e-13 * std::max(1.0, e.norm() * f.norm());
  Vector w = e.transpose() * f;

  for (;;) {
    int best = -1;
    double wmax = tol;
    for (int j = 0; j < p; ++j) {
      if (!in_passive[j] && w(j) > wmax) {
        wmax = w(j);
        best = j;
      }
    }
    if (best < 0) break;

    in_passive[best] = true;
    passive.push_back(best);
    std::sort(passive.begin(), passive.end());

    for (;;) {
      if (++res.iterations > max_iterations) {
        throw SolverError("nnls: no convergence after " + std::to_string(max_iterations) + " iterations");
      }
      const Vector s = solve_passive(e, f, passive);
      double min_s = std::numeric_limits<double>::infinity();
      for (Eigen::Index k = 0; k < s.size(); ++k) min_s = std::min(min_s, s(k));
      if (min_s > 0.0) {
        res.x.setZero();
        for (std::size_t k = 0; k < passive.size(); ++k) res.x(passive[k]) = s(static_cast<Eigen::Index>(k));
        break;
      }
      // Step toward s until the first passive variable hits zero.
      double alpha = 1.0;
      for (std::size_t k = 0; k < passive.size(); ++k) {
        const double sk = s(static_cast<Eigen::Index>(k));
        if (sk <= 0.0) {
          const double xk = res.x(passive[k]);
          alpha = std::min(alpha, xk / (xk - sk));
        }
      }
      for (std::size_t k = 0; k < passive.size(); ++k) {
        const int j = passive[k];
        res.x(j) += alpha * (s(static_cast<Eigen::Index>(k)) - res.x(j));
      }
      std::vector<int> kept;
      for (int j : passive) {
        if (res.x(j) <= tol) {
          res.x(j) = 0.0;
          in_passive[j] = false;
        } else {
          kept.push_back(j);
        }
      }
      passive.swap(kept);
      if (passive.empty()) break;
    }
    if (++res.iterations > max_iterations) {
      throw SolverError("nnls: no convergence after " + std::to_string(max_iterations) + " iterations");
    }
    w = e.transpose() * (f - e * res.x);
  }
  return res;
}

}  // namespace conetest
