#include "conetest/bayesweights.hpp"

#include <cmath>
#include <ostream>

#include "conetest/errors.hpp"
#include "conetest/parallel.hpp"

namespace conetest {

PriorSpec default_prior(int p) { return InvWishartPrior{SymPD::identity(p), p + 2}; }

std::string prior_label(const PriorSpec& prior) {
  if (const auto* iw = std::get_if<InvWishartPrior>(&prior)) {
    const bool unit = iw->gamma.matrix().isIdentity(0.0);
    return "invwishart:m=" + std::to_string(iw->m) + (unit ? "" : ",gamma=custom");
  }
  return "haar";
}

PriorSpec parse_prior(const std::string& text, int p) {
  if (text == "haar") return HaarPrior{};
  const std::string head = "invwishart";
  if (text.rfind(head, 0) != 0) throw DomainError("unknown prior '" + text + "' (expected invwishart:m=<int> or haar)");
  if (text == head) return default_prior(p);
  const std::string tail = text.substr(head.size());
  if (tail.rfind(":m=", 0) != 0) throw DomainError("prior: expected invwishart:m=<int>");
  std::size_t used = 0;
  int m = 0;
  try {
    m = std::stoi(tail.substr(3), &used);
  } catch (const std::exception&) {
    throw DomainError("prior: m must be an integer");
  }
  if (used != tail.size() - 3) throw DomainError("prior: m must be an integer");
  if (m <= p + 1) throw DomainError("prior: inverted Wishart needs m > p + 1");
  return InvWishartPrior{SymPD::identity(p), m};
}

SymPD draw_inverse_wishart(const InvWishartPrior& prior, Engine& eng) {
  const int p = prior.gamma.dim();
  if (prior.m <= p + 1) throw DomainError("draw_inverse_wishart: need m > p + 1");
  // Sigma^{-1} = T T' with T = chol(gamma^{-1}) * A and A the Bartlett factor.
  const Matrix psi_factor = pd_factor(prior.gamma.inverse());
  std::normal_distribution<double> z01;
  Matrix a = Matrix::Zero(p, p);
  for (int i = 0; i < p; ++i) {
    std::chi_squared_distribution<double> chi(prior.m - i);
    a(i, i) = std::sqrt(chi(eng));
    for (int j = 0; j < i; ++j) a(i, j) = z01(eng);
  }
  const Matrix t = psi_factor * a;
  const Matrix tinv = t.triangularView<Eigen::Lower>().solve(Matrix::Identity(p, p));
  return SymPD(tinv.transpose() * tinv);
}

BayesWeights bayes_weights(const PriorSpec& prior, int n, int p, const std::optional<SymPD>& s_fixed,
                           std::uint64_t reps, const SeedSpec& seed, int workers) {
  if (reps < 10000) throw DomainError("bayes_weights: need reps >= 1e4");
  if (p < 1 || n < p + 2) throw DomainError("bayes_weights: need n >= p + 2");
  const bool haar = std::holds_alternative<HaarPrior>(prior);
  if (haar && !s_fixed) throw DomainError("bayes_weights: the Haar weight needs a fixed covariance S");
  if (haar && s_fixed->dim() != p) throw DomainError("bayes_weights: S has the wrong dimension");
  if (const auto* iw = std::get_if<InvWishartPrior>(&prior)) {
    if (iw->gamma.dim() != p) throw DomainError("bayes_weights: gamma has the wrong dimension");
    if (iw->m <= p + 1) throw DomainError("bayes_weights: inverted Wishart needs m > p + 1");
  }

  using Counts = std::vector<std::uint64_t>;
  const Vector zero = Vector::Zero(p);
  const auto parts = run_blocks<Counts>(reps, workers, [&](std::uint64_t block, std::uint64_t, std::uint64_t count) {
    Engine eng = block_engine(seed, block);
    Counts c(p + 1, 0);
    if (haar) {
      const int nu = n - p;
      const Matrix shape_factor = s_fixed->factor() * std::sqrt((n - 1.0) / (static_cast<double>(n) * nu));
      std::normal_distribution<double> z01;
      std::chi_squared_distribution<double> chi(nu);
      Vector z(p);
      for (std::uint64_t i = 0; i < count; ++i) {
        for (int j = 0; j < p; ++j) z(j) = z01(eng);
        const Vector xbar = shape_factor * z / std::sqrt(chi(eng) / nu);
        ++c[active_face(xbar, *s_fixed).size()];
      }
    } else {
      const auto& iw = std::get<InvWishartPrior>(prior);
      for (std::uint64_t i = 0; i < count; ++i) {
        const SymPD sigma = draw_inverse_wishart(iw, eng);
        const SampleStats stats = sample_dataset(n, zero, sigma, eng);
        ++c[active_face(stats.mean(), stats.cov()).size()];
      }
    }
    return c;
  });
  Counts total(p + 1, 0);
  for (const auto& part : parts)
    for (int k = 0; k <= p; ++k) total[k] += part[k];
  const MixtureWeights mw = weights_from_counts(p, total);
  return BayesWeights{mw.w, mw.se, mw.reps, prior, n, p};
}

double critval_bayes(StatKind kind, double alpha, const BayesWeights& weights) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("critval_bayes: alpha must lie in (0, 1)");
  if (kind != StatKind::LRT && kind != StatKind::UIT) throw DomainError("critval_bayes: kind must be lrt or uit");
  return solve_critical([&](double c) { return weighted_tail(kind, weights.b, c, weights.n, weights.p); }, alpha);
}

double bayes_pvalue(StatKind kind, double value, const BayesWeights& weights) {
  if (std::isnan(value) || value < 0.0) throw DomainError("bayes_pvalue: statistic must be >= 0");
  return weighted_tail(kind, weights.b, value, weights.n, weights.p);
}

void write_bayes_weights_csv(std::ostream& os, const BayesWeights& w) {
  os << "# p=" << w.p << ",n=" << w.n << ",prior=" << prior_label(w.prior) << "\n";
  os << "k,w,se,reps,prior\n";
  for (int k = 0; k <= w.p; ++k) {
    os << k << "," << format_double(w.b[k]) << "," << format_double(w.se[k]) << "," << w.reps << ","
       << prior_label(w.prior) << "\n";
  }
}

}  // namespace conetest
