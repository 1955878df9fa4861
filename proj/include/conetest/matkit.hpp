#pragma once

// Dense symmetric positive-definite linear algebra, index partitions,
// sufficient statistics and reproducible Gaussian sampling.

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace conetest {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Lower-triangular Cholesky factor of a symmetric matrix. Throws
/// NotPositiveDefinite when a pivot falls below 1e-12 times the largest
/// diagonal entry.
Matrix pd_factor(const Matrix& m);

/// Symmetric positive-definite matrix. Validated on construction and
/// immutable afterwards; the Cholesky factor is cached.
class SymPD {
 public:
  explicit SymPD(const Matrix& m);

  static SymPD identity(int p);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  const Matrix& factor() const { return l_; }

  double operator()(int i, int j) const { return m_(i, j); }

  /// m^{-1} b
  Vector solve(const Vector& b) const;
  Matrix inverse() const;
  /// v' m^{-1} v
  double quad_inv(const Vector& v) const;
  double log_det() const;
  SymPD scaled(double s) const;

 private:
  Matrix m_;
  Matrix l_;
};

/// Subset a of P = {0..p-1}, kept sorted. The complement is always derived.
class PartitionIndex {
 public:
  PartitionIndex(int p, std::vector<int> members);

  static PartitionIndex full(int p);
  static PartitionIndex none(int p);
  /// Bit j of mask selects coordinate j. Requires p <= 63.
  static PartitionIndex from_mask(int p, std::uint64_t mask);

  int dim() const { return p_; }
  const std::vector<int>& members() const { return members_; }
  std::vector<int> complement() const;
  int size() const { return static_cast<int>(members_.size()); }
  bool is_empty() const { return members_.empty(); }
  bool is_full() const { return size() == p_; }
  bool contains(int j) const;
  std::uint64_t mask() const;

  /// One-based set notation, e.g. "{1,3}".
  std::string to_string() const;
  /// One-based member list for reports.
  std::vector<int> one_based() const;

  bool operator==(const PartitionIndex& o) const {
    return p_ == o.p_ && members_ == o.members_;
  }

 private:
  int p_;
  std::vector<int> members_;
};

/// Sufficient statistics of one dataset: sample size, mean and the unbiased
/// sample covariance (divisor n - 1).
class SampleStats {
 public:
  SampleStats(int n, Vector mean, SymPD cov);

  int n() const { return n_; }
  int dim() const { return static_cast<int>(mean_.size()); }
  const Vector& mean() const { return mean_; }
  const SymPD& cov() const { return cov_; }

  /// Sum-of-products matrix (n - 1) * cov.
  SymPD scatter() const { return cov_.scaled(n_ - 1.0); }

 private:
  int n_;
  Vector mean_;
  SymPD cov_;
};

/// Mean summaries of a data matrix (rows are observations).
SampleStats summarize(const Matrix& rows);

/// Regressed vector x_{a:a'} and Schur complement M_{aa:a'}.
struct RegressedBlock {
  Vector mean;
  Matrix cov;
};

/// x_a - M_{aa'} M_{a'a'}^{-1} x_{a'} and M_{aa} - M_{aa'} M_{a'a'}^{-1} M_{a'a}.
/// Requires a nonempty; throws ConditioningError if M_{a'a'} is singular.
RegressedBlock schur_regress(const Vector& x, const Matrix& m, const PartitionIndex& a);

struct RegressedStats {
  Vector mean;
  SymPD cov;
};

RegressedStats schur_stats(const SampleStats& stats, const PartitionIndex& a);

/// Principal submatrix m(idx, idx).
Matrix principal(const Matrix& m, const std::vector<int>& idx);
Vector gather(const Vector& v, const std::vector<int>& idx);

// ---------------------------------------------------------------------------
// Reproducible random streams

struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;

  bool operator==(const SeedSpec&) const = default;
};

using Engine = std::mt19937_64;

/// Counter-based child stream; pure and injective in child.
SeedSpec derive_stream(const SeedSpec& seed, std::uint64_t child);

Engine make_engine(const SeedSpec& seed);

/// n rows of N_p(theta, sigma).
Matrix draw_rows(int n, const Vector& theta, const SymPD& sigma, Engine& eng);

/// Summaries of n i.i.d. N_p(theta, sigma) draws. Requires n >= p + 2.
SampleStats sample_dataset(int n, const Vector& theta, const SymPD& sigma, const SeedSpec& seed);
SampleStats sample_dataset(int n, const Vector& theta, const SymPD& sigma, Engine& eng);

/// Debug dump: "n=<int>", the mean row, then p covariance rows, 17 significant digits.
void write_stats_csv(std::ostream& os, const SampleStats& stats);

/// 17-significant-digit decimal rendering used in every machine-readable output.
std::string format_double(double v);

}  // namespace conetest
