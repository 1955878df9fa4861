#pragma once

// Bayes-weighted significance levels: the null rejection probability is
// averaged over the nuisance covariance instead of maximized. The averaged
// face-size law b(k,n,p) replaces w(p,k;Sigma) in the mixture tails.

#include <iosfwd>
#include <optional>
#include <string>
#include <variant>

#include "conetest/nulldist.hpp"

namespace conetest {

/// Inverted Wishart W^{-1}(gamma, m): Sigma^{-1} ~ Wishart(gamma^{-1}, m), so
/// E[Sigma] = gamma / (m - p - 1). Requires m > p + 1.
struct InvWishartPrior {
  SymPD gamma;
  int m;
};

/// Haar (invariant) measure on the covariance; evaluated conditionally on a
/// supplied covariance S.
struct HaarPrior {};

using PriorSpec = std::variant<HaarPrior, InvWishartPrior>;

/// Default neutral prior: gamma = I, m = p + 2.
PriorSpec default_prior(int p);
std::string prior_label(const PriorSpec& prior);

/// "invwishart:m=<int>" (gamma = I) or "haar".
PriorSpec parse_prior(const std::string& text, int p);

struct BayesWeights {
  std::vector<double> b;   // b[k], k = 0..p
  std::vector<double> se;
  std::uint64_t reps = 0;
  PriorSpec prior;
  int n = 0;
  int p = 0;
};

/// Draw Sigma ~ W^{-1}(gamma, m) with the Bartlett decomposition.
SymPD draw_inverse_wishart(const InvWishartPrior& prior, Engine& eng);

/// Face-size law under the compound null.
///   InvWishart: Sigma from the prior, then an n-sample null dataset; tally |a| of (x-bar, S).
///   Haar: with S fixed at s_fixed, x-bar follows the conditional law of the integrated
///   density, a multivariate t with n - p degrees of freedom and shape (n - 1) S / (n (n - p)).
/// Requires reps >= 1e4; Haar requires s_fixed.
BayesWeights bayes_weights(const PriorSpec& prior, int n, int p, const std::optional<SymPD>& s_fixed,
                           std::uint64_t reps, const SeedSpec& seed, int workers = 0);

/// Bisection root of sum_k b[k] * component_tail(kind, k, c) = alpha.
double critval_bayes(StatKind kind, double alpha, const BayesWeights& weights);

/// Bayes-weighted tail at the observed statistic.
double bayes_pvalue(StatKind kind, double value, const BayesWeights& weights);

/// Same schema as the mixture weight table plus a prior column.
void write_bayes_weights_csv(std::ostream& os, const BayesWeights& w);

}  // namespace conetest
