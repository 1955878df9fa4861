#include <gtest/gtest.h>

#include "conetest/errors.hpp"
#include "conetest/nnls.hpp"
#include "support.hpp"

using namespace conetest;

namespace {

// Minimum of ||E x - f|| over x >= 0 by solving every unconstrained subproblem.
double brute_force_residual(const Matrix& e, const Vector& f) {
  const int p = static_cast<int>(e.cols());
  double best = f.squaredNorm();
  for (std::uint64_t mask = 1; mask < (1u << p); ++mask) {
    std::vector<int> idx;
    for (int j = 0; j < p; ++j)
      if (mask >> j & 1) idx.push_back(j);
    const Matrix sub = e(Eigen::all, idx);
    const Vector z = sub.colPivHouseholderQr().solve(f);
    if ((z.array() < 0).any()) continue;
    best = std::min(best, (sub * z - f).squaredNorm());
  }
  return best;
}

}  // namespace

TEST(Nnls, MatchesBruteForceOnRandomProblems) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const int p = 1 + trial % 6;
    const Matrix e = Eigen::LLT<Matrix>(support::random_spd(p, rng)).matrixL();
    const Vector f = support::random_vector(p, rng);
    const NnlsResult r = nnls(e, f);
    EXPECT_TRUE((r.x.array() >= 0).all());
    const double resid = (e * r.x - f).squaredNorm();
    EXPECT_NEAR(resid, brute_force_residual(e, f), 1e-9 * (1 + f.squaredNorm()));
    // KKT: gradient nonnegative off the passive set, zero on it.
    const Vector g = e.transpose() * (e * r.x - f);
    for (int j = 0; j < p; ++j) EXPECT_GT(g(j), -1e-9 * (1 + f.norm()));
  }
}

TEST(Nnls, DimensionMismatchAndZeroRhs) {
  EXPECT_THROW(nnls(Matrix::Identity(2, 2), Vector::Ones(3)), DomainError);
  const NnlsResult r = nnls(Matrix::Identity(3, 3), Vector::Zero(3));
  EXPECT_EQ(r.x, Vector::Zero(3));
}
