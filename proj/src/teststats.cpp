#include "conetest/teststats.hpp"

#include <cmath>
#include <limits>

#include "conetest/errors.hpp"

namespace conetest {

namespace {

PartitionIndex head_face(int p) {
  std::vector<int> head(p - 1);
  for (int j = 0; j + 1 < p; ++j) head[j] = j;
  return PartitionIndex(p, std::move(head));
}

PartitionIndex cone_face(const SampleStats& stats, const Cone& cone) {
  const int p = stats.dim();
  if (cone.p != p) throw DomainError("statistic: cone dimension does not match data");
  switch (cone.kind) {
    case ConeKind::Global: return PartitionIndex::full(p);
    case ConeKind::HalfSpace: return stats.mean()(p - 1) > 0.0 ? PartitionIndex::full(p) : head_face(p);
    case ConeKind::Orthant: return active_face(stats.mean(), stats.cov());
  }
  throw DomainError("statistic: unknown cone");
}

// Fills quad_face and denominator for face a under W = (n - 1) S.
void face_terms(const SampleStats& stats, const PartitionIndex& a, StatisticResult& r) {
  const double n = stats.n();
  const SymPD w = stats.scatter();
  const Vector& x = stats.mean();
  r.face = a;
  if (a.is_empty()) {
    r.quad_face = 0.0;
  } else {
    const RegressedBlock reg = schur_regress(x, w.matrix(), a);
    r.quad_face = n * SymPD(reg.cov).quad_inv(reg.mean);
  }
  if (a.is_full()) {
    r.denominator = 1.0;
  } else {
    const std::vector<int> ci = a.complement();
    const SymPD wcc(w.matrix()(ci, ci));
    r.denominator = 1.0 + n * wcc.quad_inv(x(ci));
  }
}

}  // namespace

StatKind parse_stat_kind(const std::string& s) {
  if (s == "t2") return StatKind::T2;
  if (s == "lrt") return StatKind::LRT;
  if (s == "uit") return StatKind::UIT;
  if (s == "fuit") return StatKind::FUIT;
  throw DomainError("unknown statistic '" + s + "' (expected t2|lrt|uit|fuit)");
}

std::string to_string(StatKind k) {
  switch (k) {
    case StatKind::T2: return "t2";
    case StatKind::LRT: return "lrt";
    case StatKind::UIT: return "uit";
    case StatKind::FUIT: return "fuit";
  }
  return "?";
}

StatisticResult hotelling_t2(const SampleStats& stats) {
  StatisticResult r;
  r.kind = StatKind::T2;
  r.cone = Cone::global(stats.dim());
  r.face = PartitionIndex::full(stats.dim());
  r.value = stats.n() * stats.cov().quad_inv(stats.mean());
  r.quad_face = r.value;
  r.denominator = 1.0;
  return r;
}

StatisticResult uit(const SampleStats& stats, const Cone& cone) {
  StatisticResult r;
  r.kind = StatKind::UIT;
  r.cone = cone;
  face_terms(stats, cone_face(stats, cone), r);
  r.value = r.quad_face;
  return r;
}

StatisticResult lrt(const SampleStats& stats, const Cone& cone) {
  StatisticResult r;
  r.kind = StatKind::LRT;
  r.cone = cone;
  face_terms(stats, cone_face(stats, cone), r);
  r.value = r.quad_face / r.denominator;
  return r;
}

StatisticResult fuit(const SampleStats& stats, const Cone& cone) {
  const int p = stats.dim();
  if (cone.p != p) throw DomainError("fuit: cone dimension does not match data");
  if (cone.kind == ConeKind::Global) throw DomainError("fuit: defined for the orthant and half-space only");
  StatisticResult r;
  r.kind = StatKind::FUIT;
  r.cone = cone;
  r.t.resize(p);
  const double rn = std::sqrt(static_cast<double>(stats.n()));
  for (int j = 0; j < p; ++j) {
    const double sjj = stats.cov()(j, j);
    if (!(sjj > 0.0)) throw ConditioningError("fuit: zero variance in coordinate " + std::to_string(j + 1));
    r.t(j) = rn * stats.mean()(j) / std::sqrt(sjj);
  }
  if (cone.kind == ConeKind::Orthant) {
    Eigen::Index arg = 0;
    r.value = r.t.maxCoeff(&arg);
    r.face = PartitionIndex(p, {static_cast<int>(arg)});
  } else {
    for (int j = 0; j + 1 < p; ++j) r.t(j) = std::abs(r.t(j));
    r.value = std::numeric_limits<double>::quiet_NaN();
    r.face = PartitionIndex::full(p);
  }
  return r;
}

StatisticResult compute_statistic(StatKind kind, const SampleStats& stats, const Cone& cone) {
  switch (kind) {
    case StatKind::T2: return hotelling_t2(stats);
    case StatKind::LRT: return lrt(stats, cone);
    case StatKind::UIT: return uit(stats, cone);
    case StatKind::FUIT: return fuit(stats, cone);
  }
  throw DomainError("compute_statistic: unknown kind");
}

ProjectionResult project_stats(const SampleStats& stats, const Cone& cone, ProjectionAlgorithm algorithm) {
  const Vector x = std::sqrt(static_cast<double>(stats.n())) * stats.mean();
  return project(x, Metric(stats.scatter()), cone, algorithm);
}

double uit_by_projection(const SampleStats& stats, const Cone& cone, ProjectionAlgorithm algorithm) {
  return project_stats(stats, cone, algorithm).sq_norm;
}

double lrt_by_projection(const SampleStats& stats, const Cone& cone, ProjectionAlgorithm algorithm) {
  const ProjectionResult r = project_stats(stats, cone, algorithm);
  return r.sq_norm / (1.0 + r.sq_resid);
}

double log_integrated_lr_direct(const SampleStats& stats, const Cone& cone) {
  const double n = stats.n();
  const Matrix w = stats.scatter().matrix();
  const Vector& x = stats.mean();
  const Vector theta = project_stats(stats, cone).point / std::sqrt(n);
  const Vector d = x - theta;
  const SymPD at_null(w + n * x * x.transpose());
  const SymPD at_sup(w + n * d * d.transpose());
  return 0.5 * (n - 1.0) * (at_null.log_det() - at_sup.log_det());
}

double integrated_lr(const SampleStats& stats, const Cone& cone) {
  const double direct = log_integrated_lr_direct(stats, cone);
  const double via_lrt = 0.5 * (stats.n() - 1.0) * std::log1p(lrt(stats, cone).value);
  if (std::abs(direct - via_lrt) > 1e-8 * std::max(1.0, std::abs(via_lrt))) {
    throw NumericalError("integrated_lr: determinant evaluation disagrees with (1 + L)^{(n-1)/2}");
  }
  return std::exp(direct);
}

double directional_t2(const SampleStats& stats, const PartitionIndex& face, const Vector& b_face) {
  if (face.is_empty()) throw DomainError("directional_t2: face must be nonempty");
  if (b_face.size() != face.size()) throw DomainError("directional_t2: direction length must equal |a|");
  const int p = stats.dim();
  const Matrix w = stats.scatter().matrix();
  Vector b = Vector::Zero(p);
  b(face.members()) = b_face;
  if (!face.is_full()) {
    const std::vector<int> ci = face.complement();
    const Matrix wcc = w(ci, ci);
    b(ci) = -wcc.llt().solve(Matrix(w(ci, face.members())) * b_face);
  }
  const double proj = b.dot(stats.mean());
  return stats.n() * proj * proj / b.dot(w * b);
}

Vector optimal_direction(const SampleStats& stats, const PartitionIndex& face) {
  if (face.is_empty()) throw DomainError("optimal_direction: face must be nonempty");
  const RegressedBlock reg = schur_regress(stats.mean(), stats.scatter().matrix(), face);
  return SymPD(reg.cov).solve(reg.mean);
}

}  // namespace conetest
