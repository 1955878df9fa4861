#include "conetest/matkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "conetest/errors.hpp"

namespace conetest {

namespace {

constexpr double kPivotTol = 1e-12;
constexpr double kSymTol = 1e-12;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Matrix pd_factor(const Matrix& m) {
  const Eigen::Index p = m.rows();
  if (p == 0 || m.cols() != p) throw DomainError("pd_factor: matrix must be square and nonempty");
  const double scale = m.diagonal().maxCoeff();
  if (!(scale > 0.0)) throw NotPositiveDefinite("pd_factor: nonpositive diagonal", 0);
  Matrix l = Matrix::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    double d = m(j, j);
    for (Eigen::Index k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > kPivotTol * scale)) {
      throw NotPositiveDefinite("pd_factor: pivot " + std::to_string(j) + " is " +
                                    std::to_string(d) + ", not positive definite",
                                static_cast<int>(j));
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < p; ++i) {
      double s = m(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

SymPD::SymPD(const Matrix& m) {
  if (m.rows() == 0 || m.rows() != m.cols()) throw DomainError("SymPD: matrix must be square and nonempty");
  if (!m.allFinite()) throw DomainError("SymPD: non-finite entry");
  const double mag = m.cwiseAbs().maxCoeff();
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > kSymTol * std::max(mag, 1e-300)) {
    throw DomainError("SymPD: matrix is not symmetric");
  }
  m_ = 0.5 * (m + m.transpose());
  l_ = pd_factor(m_);
}

SymPD SymPD::identity(int p) { return SymPD(Matrix::Identity(p, p)); }

Vector SymPD::solve(const Vector& b) const {
  const auto l = l_.triangularView<Eigen::Lower>();
  Vector y = l.solve(b);
  return l.transpose().solve(y);
}

Matrix SymPD::inverse() const {
  const auto l = l_.triangularView<Eigen::Lower>();
  Matrix y = l.solve(Matrix::Identity(dim(), dim()));
  return y.transpose() * y;
}

double SymPD::quad_inv(const Vector& v) const {
  Vector y = l_.triangularView<Eigen::Lower>().solve(v);
  return y.squaredNorm();
}

double SymPD::log_det() const { return 2.0 * l_.diagonal().array().log().sum(); }

SymPD SymPD::scaled(double s) const {
  if (!(s > 0.0)) throw DomainError("SymPD::scaled: factor must be positive");
  SymPD out(*this);
  out.m_ *= s;
  out.l_ *= std::sqrt(s);
  return out;
}

// ---------------------------------------------------------------------------

PartitionIndex::PartitionIndex(int p, std::vector<int> members) : p_(p), members_(std::move(members)) {
  if (p < 1) throw DomainError("PartitionIndex: p must be >= 1");
  std::sort(members_.begin(), members_.end());
  if (std::adjacent_find(members_.begin(), members_.end()) != members_.end()) {
    throw DomainError("PartitionIndex: duplicate member");
  }
  for (int j : members_) {
    if (j < 0 || j >= p) throw DomainError("PartitionIndex: member out of range");
  }
}

PartitionIndex PartitionIndex::full(int p) {
  std::vector<int> m(p);
  for (int j = 0; j < p; ++j) m[j] = j;
  return PartitionIndex(p, std::move(m));
}

PartitionIndex PartitionIndex::none(int p) { return PartitionIndex(p, {}); }

PartitionIndex PartitionIndex::from_mask(int p, std::uint64_t mask) {
  if (p > 63) throw DomainError("PartitionIndex::from_mask: p too large");
  std::vector<int> m;
  for (int j = 0; j < p; ++j)
    if (mask & (std::uint64_t{1} << j)) m.push_back(j);
  return PartitionIndex(p, std::move(m));
}

std::vector<int> PartitionIndex::complement() const {
  std::vector<int> c;
  c.reserve(p_ - members_.size());
  auto it = members_.begin();
  for (int j = 0; j < p_; ++j) {
    if (it != members_.end() && *it == j) {
      ++it;
    } else {
      c.push_back(j);
    }
  }
  return c;
}

bool PartitionIndex::contains(int j) const {
  return std::binary_search(members_.begin(), members_.end(), j);
}

std::uint64_t PartitionIndex::mask() const {
  std::uint64_t m = 0;
  for (int j : members_) m |= std::uint64_t{1} << j;
  return m;
}

std::string PartitionIndex::to_string() const {
  std::string s = "{";
  for (std::size_t i = 0; i < members_.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(members_[i] + 1);
  }
  return s + "}";
}

std::vector<int> PartitionIndex::one_based() const {
  std::vector<int> out(members_);
  for (int& j : out) ++j;
  return out;
}

// ---------------------------------------------------------------------------

SampleStats::SampleStats(int n, Vector mean, SymPD cov) : n_(n), mean_(std::move(mean)), cov_(std::move(cov)) {
  const int p = static_cast<int>(mean_.size());
  if (p < 1) throw DomainError("SampleStats: empty mean");
  if (cov_.dim() != p) throw DomainError("SampleStats: mean/covariance dimension mismatch");
  if (n_ < p + 2) {
    throw DomainError("SampleStats: need n >= p + 2 (n=" + std::to_string(n_) + ", p=" + std::to_string(p) + ")");
  }
  if (!mean_.allFinite()) throw DomainError("SampleStats: non-finite mean");
}

SampleStats summarize(const Matrix& rows) {
  const Eigen::Index n = rows.rows();
  const Eigen::Index p = rows.cols();
  if (p < 1) throw DomainError("summarize: no columns");
  if (n < p + 2) {
    throw DomainError("summarize: need n >= p + 2 rows (n=" + std::to_string(n) + ", p=" + std::to_string(p) + ")");
  }
  Vector mean = rows.colwise().mean().transpose();
  Matrix centered = rows.rowwise() - mean.transpose();
  Matrix cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  return SampleStats(static_cast<int>(n), std::move(mean), SymPD(cov));
}

Matrix principal(const Matrix& m, const std::vector<int>& idx) { return m(idx, idx); }

Vector gather(const Vector& v, const std::vector<int>& idx) { return v(idx); }

RegressedBlock schur_regress(const Vector& x, const Matrix& m, const PartitionIndex& a) {
  if (a.is_empty()) throw DomainError("schur_regress: index set a must be nonempty");
  if (x.size() != a.dim() || m.rows() != a.dim()) throw DomainError("schur_regress: dimension mismatch");
  const auto& ai = a.members();
  if (a.is_full()) return {x, m};
  const std::vector<int> ci = a.complement();
  Matrix lcc;
  try {
    lcc = pd_factor(m(ci, ci));
  } catch (const NotPositiveDefinite&) {
    throw ConditioningError("schur_regress: complement block of " + a.to_string() + " is singular");
  }
  const auto llt = [&](const auto& rhs) {
    const Matrix y = lcc.triangularView<Eigen::Lower>().solve(rhs);
    return Matrix(lcc.transpose().triangularView<Eigen::Upper>().solve(y));
  };
  const Matrix mac = m(ai, ci);
  RegressedBlock out;
  out.mean = x(ai) - mac * llt(Matrix(x(ci)));
  out.cov = m(ai, ai) - mac * llt(Matrix(mac.transpose()));
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  return out;
}

RegressedStats schur_stats(const SampleStats& stats, const PartitionIndex& a) {
  if (a.dim() != stats.dim()) throw DomainError("schur_stats: partition dimension mismatch");
  if (a.is_full()) return {stats.mean(), stats.cov()};
  RegressedBlock b = schur_regress(stats.mean(), stats.cov().matrix(), a);
  return {std::move(b.mean), SymPD(b.cov)};
}

// ---------------------------------------------------------------------------

SeedSpec derive_stream(const SeedSpec& seed, std::uint64_t child) {
  // The parent pair is folded into a new master; the child index becomes the
  // stream id, so distinct children never collide.
  const std::uint64_t folded = splitmix64(seed.master_seed ^ splitmix64(seed.stream_id + 0x632be59bd9b4e019ULL));
  return SeedSpec{folded, child};
}

Engine make_engine(const SeedSpec& seed) {
  const std::uint64_t a = splitmix64(seed.master_seed);
  const std::uint64_t b = splitmix64(seed.stream_id ^ 0xd1b54a32d192ed03ULL);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return Engine(seq);
}

Matrix draw_rows(int n, const Vector& theta, const SymPD& sigma, Engine& eng) {
  const int p = sigma.dim();
  if (theta.size() != p) throw DomainError("draw_rows: theta/sigma dimension mismatch");
  std::normal_distribution<double> z01;
  Matrix z(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) z(i, j) = z01(eng);
  Matrix rows = z * sigma.factor().transpose();
  rows.rowwise() += theta.transpose();
  return rows;
}

SampleStats sample_dataset(int n, const Vector& theta, const SymPD& sigma, Engine& eng) {
  if (n < sigma.dim() + 2) throw DomainError("sample_dataset: need n >= p + 2");
  return summarize(draw_rows(n, theta, sigma, eng));
}

SampleStats sample_dataset(int n, const Vector& theta, const SymPD& sigma, const SeedSpec& seed) {
  Engine eng = make_engine(seed);
  return sample_dataset(n, theta, sigma, eng);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_stats_csv(std::ostream& os, const SampleStats& stats) {
  const int p = stats.dim();
  os << "n=" << stats.n() << "\n";
  for (int j = 0; j < p; ++j) os << (j ? "," : "") << format_double(stats.mean()(j));
  os << "\n";
  // Column-major: row i of the dump is column i of the matrix (symmetric, so identical values).
  for (int c = 0; c < p; ++c) {
    for (int r = 0; r < p; ++r) os << (r ? "," : "") << format_double(stats.cov()(r, c));
    os << "\n";
  }
}

}  // namespace conetest
