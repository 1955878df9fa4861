#pragma once

#include <random>

#include "conetest/matkit.hpp"

namespace conetest::support {

inline Matrix random_spd(int p, std::mt19937_64& rng, double ridge = 0.1) {
  std::normal_distribution<double> z;
  Matrix a(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) a(i, j) = z(rng);
  Matrix m = a * a.transpose() / p + ridge * Matrix::Identity(p, p);
  return 0.5 * (m + m.transpose());
}

inline Vector random_vector(int p, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> z;
  Vector v(p);
  for (int j = 0; j < p; ++j) v(j) = scale * z(rng);
  return v;
}

/// Summaries of n rows of N(mean, sigma), computed without the library's sampler.
inline SampleStats random_stats(int n, const Vector& mean, const Matrix& sigma, std::mt19937_64& rng) {
  const int p = static_cast<int>(mean.size());
  const Matrix l = Eigen::LLT<Matrix>(sigma).matrixL();
  Matrix rows(n, p);
  for (int i = 0; i < n; ++i) rows.row(i) = (mean + l * random_vector(p, rng)).transpose();
  return summarize(rows);
}

}  // namespace conetest::support
