#include <gtest/gtest.h>

#include "conetest/cones.hpp"
#include "conetest/errors.hpp"
#include "support.hpp"

using namespace conetest;
using conetest::support::random_spd;
using conetest::support::random_vector;

namespace {

// Projection onto the orthant by minimizing over every face with a generic solver.
Vector oracle_orthant_projection(const Vector& x, const Matrix& a) {
  const int p = static_cast<int>(x.size());
  const Matrix b = a.inverse();
  double best = b.size() ? x.dot(b * x) : 0.0;
  Vector arg = Vector::Zero(p);
  for (std::uint64_t mask = 1; mask < (1u << p); ++mask) {
    std::vector<int> idx;
    for (int j = 0; j < p; ++j)
      if (mask >> j & 1) idx.push_back(j);
    // Minimize (x - E t)' B (x - E t) over t: normal equations with the column selector E.
    const Matrix id = Matrix::Identity(p, p);
    const Matrix e = id(Eigen::all, idx);
    const Vector t = (e.transpose() * b * e).ldlt().solve(e.transpose() * b * x);
    if ((t.array() < 0).any()) continue;
    const Vector th = e * t;
    const double obj = (x - th).dot(b * (x - th));
    if (obj < best) {
      best = obj;
      arg = th;
    }
  }
  return arg;
}

}  // namespace

TEST(Cone, MembershipAndNames) {
  Vector v(3);
  v << 1, -1, 0;
  EXPECT_FALSE(Cone::orthant(3).contains(v));
  EXPECT_TRUE(Cone::half_space(3).contains(v));
  EXPECT_TRUE(Cone::global(3).contains(v));
  EXPECT_EQ(parse_cone_kind("halfspace"), ConeKind::HalfSpace);
  EXPECT_THROW(parse_cone_kind("ball"), DomainError);
}

TEST(Projection, OrthantMatchesGenericFaceMinimizer) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    const int p = 1 + trial % 6;
    const Matrix a = random_spd(p, rng);
    const Vector x = random_vector(p, rng);
    const Metric metric{SymPD(a)};
    const Vector oracle = oracle_orthant_projection(x, a);
    for (auto alg : {ProjectionAlgorithm::FaceEnumeration, ProjectionAlgorithm::ActiveSet}) {
      const ProjectionResult r = project(x, metric, Cone::orthant(p), alg);
      EXPECT_LT((r.point - oracle).norm(), 1e-9 * (1 + x.norm()));
      EXPECT_LT(kkt_gap(x, metric, r), 1e-9);
      EXPECT_NEAR(r.sq_norm + r.sq_resid, metric.sq_norm(x), 1e-9 * (1 + metric.sq_norm(x)));
    }
  }
}

TEST(Projection, HalfSpaceAndGlobal) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int p = 1 + trial % 5;
    const Matrix a = random_spd(p, rng);
    const Vector x = random_vector(p, rng);
    const Metric metric{SymPD(a)};
    const ProjectionResult e = project(x, metric, Cone::half_space(p), ProjectionAlgorithm::FaceEnumeration);
    const ProjectionResult s = project(x, metric, Cone::half_space(p), ProjectionAlgorithm::ActiveSet);
    EXPECT_LT((e.point - s.point).norm(), 1e-9 * (1 + x.norm()));
    EXPECT_GE(e.point(p - 1), 0.0);
    if (x(p - 1) >= 0) {
      EXPECT_EQ(e.point, x);
    } else {
      EXPECT_NEAR(e.point(p - 1), 0.0, 1e-12);
      // Residual is A-orthogonal to the hyperplane: A^{-1}(x - pi) is a multiple of e_p.
      const Vector g = a.ldlt().solve(x - e.point);
      EXPECT_LT(g.head(p - 1).norm(), 1e-9 * (1 + g.norm()));
    }
    EXPECT_EQ(project(x, metric, Cone::global(p)).point, x);
  }
}

TEST(ActiveFace, UniqueTrueIndicatorMatchesBruteForce) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 300; ++trial) {
    const int p = 1 + trial % 6;
    const SymPD m(random_spd(p, rng));
    const Vector x = random_vector(p, rng);
    const auto faces = indicator_faces(x, m);
    ASSERT_EQ(faces.size(), 1u);
    EXPECT_EQ(active_face(x, m), faces.front());
    // The face is the support of the projection.
    const ProjectionResult r = project(x, Metric(m), Cone::orthant(p), ProjectionAlgorithm::FaceEnumeration);
    for (int j = 0; j < p; ++j) EXPECT_EQ(faces.front().contains(j), r.point(j) > 1e-12);
  }
}

TEST(DualCone, MembersProjectToZero) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int p = 2 + trial % 4;
    const Matrix a = random_spd(p, rng);
    const Metric metric{SymPD(a)};
    Vector u = random_vector(p, rng).cwiseAbs();
    const Vector w = -(a * u);
    EXPECT_TRUE(dual_member(w, metric, Cone::orthant(p)));
    EXPECT_LT(project(w, metric, Cone::orthant(p)).point.norm(), 1e-10);
    Vector ep = Vector::Zero(p);
    ep(p - 1) = 1.0;
    const Vector h = -2.0 * (a * ep);
    EXPECT_TRUE(dual_member(h, metric, Cone::half_space(p)));
    EXPECT_LT(project(h, metric, Cone::half_space(p)).point.norm(), 1e-10);
    EXPECT_FALSE(dual_member(-w, metric, Cone::orthant(p)));
    EXPECT_FALSE(dual_member(w, metric, Cone::global(p)));
  }
}

TEST(Projection, DimensionMismatchThrows) {
  const Metric metric{SymPD::identity(3)};
  EXPECT_THROW(project(Vector::Ones(2), metric, Cone::orthant(3)), DomainError);
}
