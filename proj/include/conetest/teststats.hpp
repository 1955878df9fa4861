#pragma once

// Hotelling's T^2, the cone-restricted likelihood-ratio (LRT) and
// union-intersection (UIT) statistics, and the coordinatewise finite
// union-intersection test (FUIT).
//
// Scale convention: T^2 and the FUIT t statistics use the unbiased covariance
// S. The LRT and UIT are evaluated under the sum-of-products matrix
// W = (n - 1) S, which is the scale on which their null laws are mixtures of
// chi2_k / chi2_{n-p} ratios. Consequently the global-cone LRT and UIT both
// equal T^2 / (n - 1).

#include <optional>
#include <string>

#include "conetest/cones.hpp"

namespace conetest {

enum class StatKind { T2, LRT, UIT, FUIT };

StatKind parse_stat_kind(const std::string& s);
std::string to_string(StatKind k);

struct StatisticResult {
  StatKind kind = StatKind::T2;
  Cone cone;
  /// Statistic value. NaN for the half-space FUIT, which has no scalar form.
  double value = 0.0;
  /// Active face a (full set for T^2 and the global cone).
  PartitionIndex face = PartitionIndex::none(1);
  /// n x_{a:a'}' W_{aa:a'}^{-1} x_{a:a'} on the active face (T^2 itself for kind T2).
  double quad_face = 0.0;
  /// 1 + n x_{a'}' W_{a'a'}^{-1} x_{a'}; only the LRT divides by it.
  double denominator = 1.0;
  /// FUIT coordinate t statistics; for the half-space the first p-1 entries are |t_j|.
  Vector t;
};

StatisticResult hotelling_t2(const SampleStats& stats);
StatisticResult uit(const SampleStats& stats, const Cone& cone);
StatisticResult lrt(const SampleStats& stats, const Cone& cone);
StatisticResult fuit(const SampleStats& stats, const Cone& cone);

/// Dispatch on kind; T2 ignores the cone.
StatisticResult compute_statistic(StatKind kind, const SampleStats& stats, const Cone& cone);

/// Cone projection of sqrt(n) x-bar under the sum-of-products metric.
ProjectionResult project_stats(const SampleStats& stats, const Cone& cone,
                               ProjectionAlgorithm algorithm = ProjectionAlgorithm::ActiveSet);

/// UIT and LRT from the projection representation, for cross-checking the face formulas.
double uit_by_projection(const SampleStats& stats, const Cone& cone,
                         ProjectionAlgorithm algorithm = ProjectionAlgorithm::ActiveSet);
double lrt_by_projection(const SampleStats& stats, const Cone& cone,
                         ProjectionAlgorithm algorithm = ProjectionAlgorithm::ActiveSet);

/// Logarithm of sup_{theta in cone} P1(x, W | theta) / P1(x, W | 0) for the marginal
/// density |W|^{(n-p-2)/2} |W + n (x - theta)(x - theta)'|^{-(n-1)/2}, evaluated with
/// determinants at the cone-constrained maximizer.
double log_integrated_lr_direct(const SampleStats& stats, const Cone& cone);

/// The integrated likelihood ratio. Cross-checks the determinant evaluation against
/// (1 + L_n)^{(n-1)/2} and throws NumericalError if they differ by more than 1e-8
/// relative. May overflow to +inf for very large L_n; see log_integrated_lr_direct.
double integrated_lr(const SampleStats& stats, const Cone& cone);

/// Per-direction squared t statistic n (b' x)^2 / (b' W b) restricted to the
/// active face: b_a is free and b_{a'} is chosen so that the statistic only sees
/// the regressed block (x_{a:a'}, W_{aa:a'}).
double directional_t2(const SampleStats& stats, const PartitionIndex& face, const Vector& b_face);

/// The maximizing direction W_{aa:a'}^{-1} x_{a:a'} on the UIT's active face.
Vector optimal_direction(const SampleStats& stats, const PartitionIndex& face);

}  // namespace conetest
