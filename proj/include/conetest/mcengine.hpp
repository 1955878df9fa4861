#pragma once

// Monte Carlo experiments: null-mixture validation, power curves, power
// domination of the orthant tests by the half-space tests, half-space
// similarity and orthant bias search, acceptance-region geometry, and the
// approach of the orthant null rejection rate to its supremum.
//
// Every experiment is deterministic in (spec, seed) and independent of the
// worker count. Reports carry the spec fingerprint and the seed.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "conetest/bayesweights.hpp"

namespace conetest {

using Json = nlohmann::ordered_json;

enum class CritMethod { MaxPrinciple, BayesWeighted };

std::string to_string(CritMethod m);

struct ExperimentSpec {
  StatKind kind = StatKind::UIT;
  ConeKind cone = ConeKind::Orthant;
  int n = 12;
  int p = 2;
  Matrix sigma = Matrix::Identity(2, 2);
  /// How sigma was generated ("identity", "random:<seed>", "concentrating:k=<k>", "explicit").
  std::string sigma_label = "identity";
  std::vector<Vector> theta_grid;
  double alpha = 0.05;
  std::uint64_t reps = 10000;
  SeedSpec seed;
  CritMethod crit = CritMethod::MaxPrinciple;
  PriorSpec prior = HaarPrior{};

  /// Throws DomainError when the spec is inconsistent.
  void validate(bool power_run) const;
  Json to_json() const;
  /// SHA-256 of the canonical JSON form.
  std::string fingerprint() const;
};

/// Three-standard-error decision band used by every experiment.
inline constexpr double kSeBand = 3.0;

/// Random covariance: A A' / p + 0.2 I with standard normal A, rescaled to unit diagonal.
SymPD random_sigma(int p, const SeedSpec& seed);
/// Equicorrelation (1 - rho) I + rho 11' with rho_k = 1 - 10^{-k} (rho_0 = 0).
SymPD concentrating_sigma(int p, int k);
double concentrating_rho(int k);
/// Covariance whose inverse is an M-matrix: inverse is tridiagonal with unit diagonal and -0.4 off-diagonal.
SymPD m_matrix_inverse_sigma(int p);

// ---------------------------------------------------------------------------

struct NullValidationRow {
  double c = 0.0;
  double empirical = 0.0;
  double mixture = 0.0;
  double se = 0.0;
  bool flagged = false;
};

struct NullValidationReport {
  ExperimentSpec spec;
  MixtureWeights weights;
  std::uint64_t weight_reps = 0;
  std::vector<NullValidationRow> rows;
  double max_abs_dev = 0.0;
  int flagged = 0;
  Json to_json() const;
  std::string to_csv() const;
};

/// Simulates spec.kind (LRT or UIT) under H0 and compares the empirical tail with
/// the mixture at each c. Weights are estimated with weight_reps draws (default 4 * reps);
/// the SE band combines the binomial error of the tail and the weight estimate.
NullValidationReport validate_null(const ExperimentSpec& spec, const std::vector<double>& c_grid,
                                   std::uint64_t weight_reps = 0, int workers = 0);

/// c-grid of the given size spanning the max-principle tail from about 0.9 down to 0.005.
std::vector<double> default_c_grid(StatKind kind, int n, int p, int points = 10);

// ---------------------------------------------------------------------------

struct PowerPoint {
  Vector theta;
  double power = 0.0;
  double se = 0.0;
};

struct PowerCurve {
  ExperimentSpec spec;
  double critical = 0.0;
  std::vector<PowerPoint> grid;
  Json to_json() const;
  std::string to_csv() const;
};

/// Critical value for the spec's statistic and method (Bayes weights use spec.reps draws).
double resolve_critical(const ExperimentSpec& spec, int workers = 0);

PowerCurve power_curve(const ExperimentSpec& spec, int workers = 0);

// ---------------------------------------------------------------------------

struct DominationPoint {
  Vector theta;
  double power_orthant = 0.0;
  double power_half = 0.0;
  double se_orthant = 0.0;
  double se_half = 0.0;
  double se_diff = 0.0;
  bool strict = false;
  bool violation = false;
};

struct DominationReport {
  ExperimentSpec spec_orthant;
  ExperimentSpec spec_half;
  double c_orthant = 0.0;
  double c_half = 0.0;
  bool same_critical = false;
  std::uint64_t pathwise_checks = 0;
  std::uint64_t pathwise_violations = 0;
  std::vector<DominationPoint> grid;
  int strict_points = 0;
  int violations = 0;
  bool passed() const;
  Json to_json() const;
  std::string to_csv() const;
};

/// Orthant test (spec_orthant) against half-space test (spec_half) of the same kind on
/// common random numbers. Throws DomainError on spec mismatch.
DominationReport domination_report(const ExperimentSpec& spec_orthant, const ExperimentSpec& spec_half,
                                   int workers = 0);

/// 20-point grid over the half-space {theta_p >= 0}: radius r/sqrt(n) along directions in
/// the (1, p) coordinate plane from angle 0 to pi.
std::vector<Vector> half_plane_grid(int n, int p, int points = 20, double radius = 2.5);

// ---------------------------------------------------------------------------

struct SimilarityRow {
  std::string sigma_label;
  std::string sigma_fingerprint;
  StatKind kind = StatKind::UIT;
  double rate = 0.0;
  double se = 0.0;
  bool within = true;
};

struct BiasWitness {
  std::string sigma_label;
  Vector theta;
  StatKind kind = StatKind::UIT;
  double power = 0.0;
  double se = 0.0;
};

struct SimilarityBiasReport {
  int n = 0;
  int p = 0;
  double alpha = 0.0;
  std::uint64_t reps = 0;
  SeedSpec seed;
  std::vector<SimilarityRow> similarity;
  double max_dev_se = 0.0;
  std::vector<std::pair<std::string, Vector>> bias_grid;
  std::vector<BiasWitness> witnesses;
  bool similarity_passed() const;
  Json to_json() const;
  std::string to_csv() const;
};

struct LabeledSigma {
  std::string label;
  SymPD sigma;
};

/// Half-space null rejection of the LRT and UIT at critval_max for every sigma, and a
/// search over (theta, sigma) for orthant tests whose power falls below alpha - 3 SE.
SimilarityBiasReport similarity_and_bias(int n, int p, const std::vector<LabeledSigma>& sigmas,
                                         const std::vector<Vector>& bias_thetas, double alpha,
                                         std::uint64_t reps, const SeedSpec& seed, int workers = 0);

// ---------------------------------------------------------------------------

enum class GeometryKind { UitOrthant, UitHalfSpace, T2 };
GeometryKind parse_geometry_kind(const std::string& s);
std::string to_string(GeometryKind k);

struct GeometryReport {
  GeometryKind kind = GeometryKind::UitOrthant;
  int n = 0;
  int p = 0;
  double alpha = 0.0;
  std::uint64_t trials = 0;
  SeedSpec seed;
  double critical = 0.0;
  /// Joint (x-bar, S) midpoints of accepted pairs that fall outside the region.
  std::uint64_t convexity_violations = 0;
  /// Same pairs with S held at the first endpoint and only x-bar averaged.
  std::uint64_t fixed_s_violations = 0;
  double worst_midpoint_ratio = 0.0;
  /// Endpoints of the first joint-space violation, when one occurred.
  struct Violation {
    Vector mean1, mean2;
    Matrix cov1, cov2;
    double stat1 = 0.0, stat2 = 0.0, stat_mid = 0.0;
  };
  std::optional<Violation> example;
  std::uint64_t dual_points = 0;
  std::uint64_t dual_zero_statistic = 0;
  std::uint64_t dual_accepted = 0;
  std::uint64_t dual_member_failures = 0;
  /// A dual-cone ray point accepted by the UIT and rejected by T^2.
  bool contrast_found = false;
  double contrast_scale = 0.0;
  double contrast_t2 = 0.0;
  double contrast_t2_critical = 0.0;
  double contrast_uit = 0.0;
  Vector contrast_mean;
  bool passed() const;
  Json to_json() const;
};

GeometryReport geometry_probe(GeometryKind kind, int n, int p, std::uint64_t trials, double alpha,
                              const SeedSpec& seed, int workers = 0);

// ---------------------------------------------------------------------------

struct SupApproachRow {
  int k = 0;
  double rho = 0.0;
  double rate = 0.0;
  double se = 0.0;
};

struct SupApproachReport {
  StatKind kind = StatKind::UIT;
  int n = 0;
  int p = 0;
  double alpha = 0.0;
  std::uint64_t reps = 0;
  SeedSpec seed;
  double critical = 0.0;
  std::vector<SupApproachRow> rows;
  bool nondecreasing = false;
  bool ends_near_alpha = false;
  bool starts_below_alpha = false;
  bool passed() const { return nondecreasing && ends_near_alpha; }
  Json to_json() const;
  std::string to_csv() const;
};

/// Orthant null rejection at the fixed max-principle critical value along the
/// equicorrelated sequence rho_k -> 1 (k = 0..K-1), on common random numbers.
SupApproachReport sup_approach(StatKind kind, int p, int n, double alpha, int K, std::uint64_t reps,
                               const SeedSpec& seed, int workers = 0);

// ---------------------------------------------------------------------------

struct FuitSizeReport {
  int n = 0;
  int p = 0;
  double alpha = 0.0;
  std::uint64_t reps = 0;
  std::string sigma_label;
  double critical = 0.0;
  double rate = 0.0;
  double se = 0.0;
  bool passed() const { return rate <= alpha + kSeBand * se; }
  Json to_json() const;
};

/// Null size of the orthant FUIT with the Bonferroni level alpha / p.
FuitSizeReport fuit_size(int n, int p, const LabeledSigma& sigma, double alpha, std::uint64_t reps,
                         const SeedSpec& seed, int workers = 0);

// ---------------------------------------------------------------------------

struct CompoundNullReport {
  StatKind kind = StatKind::UIT;
  int n = 0;
  int p = 0;
  double alpha = 0.0;
  std::uint64_t reps = 0;
  BayesWeights weights;
  double critical = 0.0;
  double rate = 0.0;
  double se = 0.0;
  bool passed() const;
  Json to_json() const;
};

/// Draws sigma from the inverted Wishart prior, then a null dataset, and rejects at
/// the Bayes-weighted critical value computed from weights.
CompoundNullReport compound_null(StatKind kind, const InvWishartPrior& prior, int n, int p, double alpha,
                                 const BayesWeights& weights, std::uint64_t reps, const SeedSpec& seed,
                                 int workers = 0);

Json seed_to_json(const SeedSpec& s);
Json vector_to_json(const Vector& v);

}  // namespace conetest
