#include "conetest/cones.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "conetest/errors.hpp"
#include "conetest/nnls.hpp"

namespace conetest {

namespace {

constexpr double kKktTol = 1e-8;

void check_dim(const Vector& x, int p, const char* where) {
  if (x.size() != p) throw DomainError(std::string(where) + ": dimension mismatch");
}

PartitionIndex positive_support(const Vector& v) {
  std::vector<int> s;
  for (Eigen::Index j = 0; j < v.size(); ++j)
    if (v(j) > 0.0) s.push_back(static_cast<int>(j));
  return PartitionIndex(static_cast<int>(v.size()), std::move(s));
}

ProjectionResult finish(const Vector& x, Vector point, PartitionIndex face, const Metric& metric) {
  ProjectionResult r{std::move(point), std::move(face), 0.0, 0.0};
  r.sq_norm = metric.sq_norm(r.point);
  r.sq_resid = metric.sq_norm(x - r.point);
  return r;
}

// Minimizer over {theta : theta_{a'} = 0} via B = A^{-1}: theta_a = x_a + B_aa^{-1} B_aa' x_a'.
Vector face_solve_precision(const Vector& x, const Matrix& b, const PartitionIndex& a) {
  Vector theta = Vector::Zero(x.size());
  if (a.is_empty()) return theta;
  const auto& ai = a.members();
  if (a.is_full()) return x;
  const std::vector<int> ci = a.complement();
  const Matrix baa = b(ai, ai);
  const Vector rhs = b(ai, ci) * x(ci);
  theta(ai) = x(ai) + baa.llt().solve(rhs);
  return theta;
}

ProjectionResult project_orthant_enum(const Vector& x, const Metric& metric) {
  const int p = metric.dim();
  if (p > kMaxEnumerationDim) throw DomainError("project: face enumeration limited to p <= 20");
  const Matrix b = metric.matrix().inverse();
  double best = std::numeric_limits<double>::infinity();
  Vector best_theta = Vector::Zero(p);
  const std::uint64_t count = std::uint64_t{1} << p;
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    const PartitionIndex a = PartitionIndex::from_mask(p, mask);
    const Vector theta = face_solve_precision(x, b, a);
    if (theta.minCoeff() < 0.0) continue;
    const Vector d = x - theta;
    const double obj = d.dot(b * d);
    if (obj < best) {
      best = obj;
      best_theta = theta;
    }
  }
  return finish(x, best_theta, positive_support(best_theta), metric);
}

ProjectionResult project_orthant_active(const Vector& x, const Metric& metric) {
  const int p = metric.dim();
  const auto l = metric.matrix().factor().triangularView<Eigen::Lower>();
  const Matrix e = l.solve(Matrix::Identity(p, p));
  const Vector f = l.solve(x);
  NnlsResult sol = nnls(e, f, 100 * p);
  ProjectionResult r = finish(x, sol.x, positive_support(sol.x), metric);

  // Optimality certificate: dual feasibility of the gradient and complementarity.
  const double xnorm2 = metric.sq_norm(x);
  if (xnorm2 > 0.0) {
    const Vector grad = e.transpose() * (f - e * r.point);
    const double scale = std::sqrt(xnorm2);
    for (int j = 0; j < p; ++j) {
      if (grad(j) > kKktTol * scale * e.col(j).norm()) {
        throw SolverError("project: active-set solution fails dual feasibility at coordinate " + std::to_string(j + 1));
      }
    }
    if (kkt_gap(x, metric, r) > kKktTol) throw SolverError("project: active-set solution fails complementarity");
  }
  return r;
}

ProjectionResult project_half_space(const Vector& x, const Metric& metric, ProjectionAlgorithm algorithm) {
  const int p = metric.dim();
  const int last = p - 1;
  PartitionIndex all = PartitionIndex::full(p);
  std::vector<int> head(last);
  for (int j = 0; j < last; ++j) head[j] = j;
  PartitionIndex p1(p, head);

  if (x(last) >= 0.0) return finish(x, x, x(last) > 0.0 ? all : p1, metric);

  Vector theta = Vector::Zero(p);
  if (algorithm == ProjectionAlgorithm::FaceEnumeration) {
    // Precision-matrix route over both faces {P, P1}; only P1 is feasible here.
    theta = face_solve_precision(x, metric.matrix().inverse(), p1);
  } else if (last > 0) {
    // Covariance route: regress the last coordinate out of the head.
    const Matrix& a = metric.matrix().matrix();
    theta.head(last) = x.head(last) - a.col(last).head(last) * (x(last) / a(last, last));
  }
  theta(last) = 0.0;
  return finish(x, theta, p1, metric);
}

}  // namespace

Cone Cone::orthant(int p) { return Cone{ConeKind::Orthant, p}; }
Cone Cone::half_space(int p) { return Cone{ConeKind::HalfSpace, p}; }
Cone Cone::global(int p) { return Cone{ConeKind::Global, p}; }

std::string to_string(ConeKind k) {
  switch (k) {
    case ConeKind::Orthant: return "orthant";
    case ConeKind::HalfSpace: return "halfspace";
    case ConeKind::Global: return "global";
  }
  return "?";
}

ConeKind parse_cone_kind(const std::string& s) {
  if (s == "orthant") return ConeKind::Orthant;
  if (s == "halfspace") return ConeKind::HalfSpace;
  if (s == "global") return ConeKind::Global;
  throw DomainError("unknown cone '" + s + "' (expected global|orthant|halfspace)");
}

std::string Cone::name() const { return to_string(kind); }

bool Cone::contains(const Vector& x, double tol) const {
  check_dim(x, p, "Cone::contains");
  switch (kind) {
    case ConeKind::Orthant: return x.minCoeff() >= -tol;
    case ConeKind::HalfSpace: return x(p - 1) >= -tol;
    case ConeKind::Global: return true;
  }
  return false;
}

bool face_indicator(const Vector& x, const SymPD& m, const PartitionIndex& a) {
  check_dim(x, m.dim(), "face_indicator");
  if (a.dim() != m.dim()) throw DomainError("face_indicator: partition dimension mismatch");
  if (a.is_empty()) return m.solve(x).maxCoeff() <= 0.0;
  if (a.is_full()) return x.minCoeff() > 0.0;
  const std::vector<int> ci = a.complement();
  const Matrix mcc = m.matrix()(ci, ci);
  const Vector back = mcc.llt().solve(Vector(x(ci)));
  if (back.maxCoeff() > 0.0) return false;
  return schur_regress(x, m.matrix(), a).mean.minCoeff() > 0.0;
}

bool face_indicator(const SampleStats& stats, const PartitionIndex& a) {
  return face_indicator(stats.mean(), stats.cov(), a);
}

std::vector<PartitionIndex> indicator_faces(const Vector& x, const SymPD& m) {
  const int p = m.dim();
  if (p > kMaxEnumerationDim) throw DomainError("indicator_faces: limited to p <= 20");
  std::vector<PartitionIndex> hits;
  const std::uint64_t count = std::uint64_t{1} << p;
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    PartitionIndex a = PartitionIndex::from_mask(p, mask);
    if (face_indicator(x, m, a)) hits.push_back(std::move(a));
  }
  return hits;
}

PartitionIndex active_face(const Vector& x, const SymPD& m) {
  const Metric metric(m);
  PartitionIndex face = project(x, metric, Cone::orthant(m.dim())).face;
  if (face_indicator(x, m, face)) return face;
  if (m.dim() > kMaxEnumerationDim) throw NumericalError("active_face: projection face fails the indicator");
  std::vector<PartitionIndex> hits = indicator_faces(x, m);
  if (hits.empty()) throw NumericalError("active_face: no face satisfies the indicator");
  // Ties fall to the smallest face.
  return *std::min_element(hits.begin(), hits.end(),
                           [](const PartitionIndex& l, const PartitionIndex& r) { return l.size() < r.size(); });
}

ProjectionResult project(const Vector& x, const Metric& metric, const Cone& cone, ProjectionAlgorithm algorithm) {
  check_dim(x, metric.dim(), "project");
  if (cone.p != metric.dim()) throw DomainError("project: cone/metric dimension mismatch");
  if (!x.allFinite()) throw DomainError("project: non-finite input");
  switch (cone.kind) {
    case ConeKind::Global: return finish(x, x, PartitionIndex::full(cone.p), metric);
    case ConeKind::HalfSpace: return project_half_space(x, metric, algorithm);
    case ConeKind::Orthant:
      return algorithm == ProjectionAlgorithm::FaceEnumeration ? project_orthant_enum(x, metric)
                                                               : project_orthant_active(x, metric);
  }
  throw DomainError("project: unknown cone");
}

double kkt_gap(const Vector& x, const Metric& metric, const ProjectionResult& r) {
  const double xn = metric.sq_norm(x);
  if (xn == 0.0) return 0.0;
  return std::abs(metric.inner(x - r.point, r.point)) / xn;
}

bool dual_member(const Vector& w, const Metric& metric, const Cone& cone, double tol) {
  check_dim(w, metric.dim(), "dual_member");
  const double wn = w.norm();
  if (wn == 0.0) return true;
  switch (cone.kind) {
    case ConeKind::Global: return false;
    case ConeKind::Orthant: {
      const Vector g = metric.matrix().solve(w);
      return g.maxCoeff() <= tol * g.cwiseAbs().maxCoeff();
    }
    case ConeKind::HalfSpace: {
      // A^{-1} w must be a nonpositive multiple of e_p.
      const Vector g = metric.matrix().solve(w);
      const int last = cone.p - 1;
      const double gmax = g.cwiseAbs().maxCoeff();
      if (g(last) > tol * gmax) return false;
      for (int j = 0; j < last; ++j)
        if (std::abs(g(j)) > tol * gmax) return false;
      return true;
    }
  }
  return false;
}

}  // namespace conetest
