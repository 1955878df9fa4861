#pragma once

// Null distributions of the cone statistics.
//
// G_{a,b}(u) = P{chi2_a / chi2_b <= u} with chi2_0 == 0, and the convolution tail
//   Gbar*_{n,a,p}(c) = E[ Gbar_{a,n-p}(c / (1 + R)) ],  R ~ chi2_{p-a} / chi2_{n-p+a}.
// Under H0 with covariance Sigma the LRT and UIT tails are the mixtures
//   P{L >= c} = sum_k w(p,k;Sigma) Gbar_{k,n-p}(c),   P{U >= c} = sum_k w(p,k;Sigma) Gbar*_{n,k,p}(c),
// where w(p,k;Sigma) is the probability that the active face has k coordinates.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "conetest/teststats.hpp"

namespace conetest {

double g_cdf(int a, int b, double u);
/// 1 - G_{a,b}(u), evaluated without cancellation.
double g_tail(int a, int b, double u);

/// Gbar*_{n,a,p}(c). Throws NumericalError if the quadrature error estimate exceeds 1e-8.
double gstar_tail(int n, int a, int p, double c);

struct MixtureWeights {
  int p = 0;
  std::vector<double> w;   // w[k], k = 0..p
  std::vector<double> se;  // sqrt(w (1 - w) / reps)
  std::uint64_t reps = 0;
};

/// Face-size tally of Z ~ N_p(0, sigma) under the metric sigma. reps >= 1e4.
MixtureWeights mixture_weights(const SymPD& sigma, std::uint64_t reps, const SeedSpec& seed, int workers = 0);

/// Weights from face-size counts, with binomial standard errors.
MixtureWeights weights_from_counts(int p, const std::vector<std::uint64_t>& counts);

/// Tail of the k-th mixture component: Gbar_{k,n-p}(c) for the LRT, Gbar*_{n,k,p}(c) for the UIT.
double component_tail(StatKind kind, int k, double c, int n, int p);

/// sum_k w[k] * component_tail(kind, k, c, n, p).
double weighted_tail(StatKind kind, std::span<const double> w, double c, int n, int p);

/// Mixture null tail P{statistic >= c} for the covariance the weights were estimated at.
double null_tail(StatKind kind, double c, int n, int p, const MixtureWeights& weights);

/// Two-point weights w[p-1] = w[p] = 1/2 of the least favourable configuration.
std::vector<double> max_principle_weights(int p);

/// Smallest c >= 0 with tail(c) <= alpha, by bisection on [0, c_hi] (c_hi doubled
/// until the tail drops below alpha). Returns 0 when the tail is already below alpha
/// just above zero.
template <class Tail>
double solve_critical(Tail tail, double alpha);

/// Critical value under the max principle: 1/2 [tail_{p-1}(c) + tail_p(c)] = alpha.
/// The same c serves the orthant (sup over Sigma) and the half-space (exact).
/// For the global cone this is the exact chi2_p / chi2_{n-p} point.
double critval_max(StatKind kind, ConeKind cone, double alpha, int n, int p);

struct PValue {
  double value = 1.0;
  /// True when the value is a supremum over the nuisance covariance (orthant cone).
  bool conservative = false;
};

/// The max-principle tail evaluated at the observed statistic.
PValue sup_pvalue(StatKind kind, ConeKind cone, double value, int n, int p);

/// Upper alpha/p point of Student t with n - 1 degrees of freedom.
double fuit_critical(double alpha, int n, int p);

/// Orthant: max_j t_j >= t_{n-1, alpha/p}. Half-space: some |t_j| (j < p) reaches the
/// upper alpha/(2p) point, or t_p reaches the upper alpha/p point.
bool fuit_rejects(const StatisticResult& r, double alpha, int n);

/// Bonferroni-adjusted p-value min(1, p * min_j p_j) (two-sided p_j for the
/// half-space head coordinates). Always conservative.
PValue fuit_pvalue(const StatisticResult& r, int n);

/// Upper-alpha point of the null law of T^2: (n - 1) p / (n - p) F_{p, n-p; alpha}.
double t2_critical(double alpha, int n, int p);
double t2_pvalue(double t2, int n, int p);

/// Upper tail of Student t with df degrees of freedom.
double student_t_tail(double t, int df);

/// CSV: header "# p=<p>,sigma_sha256=<hex>", then "k,w,se,reps" rows.
void write_weights_csv(std::ostream& os, const MixtureWeights& w, const std::string& sigma_fingerprint);

}  // namespace conetest

#include "conetest/detail/solve_critical.hpp"
