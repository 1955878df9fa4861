#pragma once

// Closed convex cones of the alternative hypothesis and metric projection onto them.
//
// The metric induced by a positive-definite A is <u, v>_A = u' A^{-1} v. Every
// projection is the minimizer of ||x - theta||_A^2 over theta in the cone.

#include <string>

#include "conetest/matkit.hpp"

namespace conetest {

enum class ConeKind { Orthant, HalfSpace, Global };

/// Orthant {theta >= 0}, half-space {theta_p >= 0} (last coordinate only), or R^p.
struct Cone {
  ConeKind kind = ConeKind::Orthant;
  int p = 1;

  static Cone orthant(int p);
  static Cone half_space(int p);
  static Cone global(int p);

  std::string name() const;
  bool contains(const Vector& x, double tol = 0.0) const;
  bool operator==(const Cone&) const = default;
};

ConeKind parse_cone_kind(const std::string& s);
std::string to_string(ConeKind k);

class Metric {
 public:
  explicit Metric(SymPD a) : a_(std::move(a)) {}
  const SymPD& matrix() const { return a_; }
  int dim() const { return a_.dim(); }
  double inner(const Vector& u, const Vector& v) const { return u.dot(a_.solve(v)); }
  double sq_norm(const Vector& u) const { return a_.quad_inv(u); }

 private:
  SymPD a_;
};

struct ProjectionResult {
  Vector point;
  PartitionIndex face;
  double sq_norm = 0.0;
  double sq_resid = 0.0;
};

enum class ProjectionAlgorithm { FaceEnumeration, ActiveSet };

/// Largest p accepted by the exhaustive face enumeration (2^p subproblems).
inline constexpr int kMaxEnumerationDim = 20;

/// 1{x_{a:a'} > 0, M_{a'a'}^{-1} x_{a'} <= 0} with the Schur partition of M.
bool face_indicator(const Vector& x, const SymPD& m, const PartitionIndex& a);
bool face_indicator(const SampleStats& stats, const PartitionIndex& a);

/// The unique a with face_indicator(x, m, a) true, located with the active-set
/// projection and confirmed by the indicator. Falls back to enumeration for
/// p <= 20 if rounding puts the projection face on the wrong side of a tie.
PartitionIndex active_face(const Vector& x, const SymPD& m);

/// Exhaustive scan of all 2^p subsets; returns every a with a true indicator.
std::vector<PartitionIndex> indicator_faces(const Vector& x, const SymPD& m);

ProjectionResult project(const Vector& x, const Metric& metric, const Cone& cone,
                         ProjectionAlgorithm algorithm = ProjectionAlgorithm::ActiveSet);

/// Scale-free complementarity gap |<x - pi, pi>_A| / ||x||_A^2.
double kkt_gap(const Vector& x, const Metric& metric, const ProjectionResult& r);

/// Membership in the dual cone {w : <w, theta>_A <= 0 for all theta in the cone}.
bool dual_member(const Vector& w, const Metric& metric, const Cone& cone, double tol = 1e-10);

}  // namespace conetest
