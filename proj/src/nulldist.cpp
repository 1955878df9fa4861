#include "conetest/nulldist.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "conetest/errors.hpp"
#include "conetest/parallel.hpp"

namespace conetest {

namespace {

constexpr double kQuadTol = 1e-8;

void check_np(int n, int p, const char* where) {
  if (p < 1) throw DomainError(std::string(where) + ": p must be >= 1");
  if (n - p < 2) throw DomainError(std::string(where) + ": need n - p >= 2");
}

}  // namespace

double g_cdf(int a, int b, double u) {
  if (a < 0 || b < 1) throw DomainError("g_cdf: need a >= 0 and b >= 1");
  if (!std::isfinite(u)) {
    if (std::isnan(u)) throw DomainError("g_cdf: u must be finite");
    return u > 0 ? 1.0 : 0.0;
  }
  if (a == 0) return u >= 0.0 ? 1.0 : 0.0;
  if (u <= 0.0) return 0.0;
  return boost::math::ibeta(0.5 * a, 0.5 * b, u / (1.0 + u));
}

double g_tail(int a, int b, double u) {
  if (a < 0 || b < 1) throw DomainError("g_tail: need a >= 0 and b >= 1");
  if (std::isnan(u)) throw DomainError("g_tail: u must be finite");
  if (a == 0) return u <= 0.0 ? 1.0 : 0.0;
  if (u <= 0.0) return 1.0;
  if (std::isinf(u)) return 0.0;
  // 1 - I_{u/(1+u)}(a/2, b/2) = I_{1/(1+u)}(b/2, a/2)
  return boost::math::ibeta(0.5 * b, 0.5 * a, 1.0 / (1.0 + u));
}

double gstar_tail(int n, int a, int p, double c) {
  check_np(n, p, "gstar_tail");
  if (a < 0 || a > p) throw DomainError("gstar_tail: need 0 <= a <= p");
  if (std::isnan(c)) throw DomainError("gstar_tail: c must be finite");
  const int b = n - p;
  if (c <= 0.0) return 1.0;
  if (a == 0) return 0.0;
  if (a == p) return g_tail(a, b, c);

  // R = chi2_k / chi2_m, V = R / (1 + R) ~ Beta(k/2, m/2), and 1 + R = 1 / (1 - V).
  // Substituting V = r^{2/k} absorbs the V^{k/2 - 1} factor of the beta density.
  const int k = p - a;
  const int m = n - p + a;
  const double hk = 0.5 * k;
  const double hm = 0.5 * m;
  const double scale = 1.0 / (hk * boost::math::beta(hk, hm));
  auto integrand = [&](double r) {
    const double v = std::pow(r, 1.0 / hk);
    const double one_minus_v = 1.0 - v;
    if (one_minus_v <= 0.0) return hm == 1.0 ? scale : 0.0;
    return scale * g_tail(a, b, c * one_minus_v) * std::pow(one_minus_v, hm - 1.0);
  };
  double err = 0.0;
  const double val =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, 1.0, 20, 1e-12, &err);
  if (!(err <= kQuadTol) || !std::isfinite(val)) {
    throw NumericalError("gstar_tail: quadrature error estimate " + std::to_string(err) + " exceeds 1e-8");
  }
  return std::clamp(val, 0.0, 1.0);
}

MixtureWeights weights_from_counts(int p, const std::vector<std::uint64_t>& counts) {
  if (static_cast<int>(counts.size()) != p + 1) throw DomainError("weights_from_counts: need p + 1 counts");
  MixtureWeights out;
  out.p = p;
  for (auto c : counts) out.reps += c;
  if (out.reps == 0) throw DomainError("weights_from_counts: no replicates");
  const double r = static_cast<double>(out.reps);
  for (auto c : counts) {
    const double w = static_cast<double>(c) / r;
    out.w.push_back(w);
    out.se.push_back(std::sqrt(w * (1.0 - w) / r));
  }
  return out;
}

MixtureWeights mixture_weights(const SymPD& sigma, std::uint64_t reps, const SeedSpec& seed, int workers) {
  if (reps < 10000) throw DomainError("mixture_weights: need reps >= 1e4");
  const int p = sigma.dim();
  using Counts = std::vector<std::uint64_t>;
  const auto parts = run_blocks<Counts>(reps, workers, [&](std::uint64_t block, std::uint64_t, std::uint64_t count) {
    Engine eng = block_engine(seed, block);
    std::normal_distribution<double> z01;
    Counts c(p + 1, 0);
    Vector z(p);
    for (std::uint64_t i = 0; i < count; ++i) {
      for (int j = 0; j < p; ++j) z(j) = z01(eng);
      const Vector x = sigma.factor() * z;
      ++c[active_face(x, sigma).size()];
    }
    return c;
  });
  Counts total(p + 1, 0);
  for (const auto& part : parts)
    for (int k = 0; k <= p; ++k) total[k] += part[k];
  return weights_from_counts(p, total);
}

double component_tail(StatKind kind, int k, double c, int n, int p) {
  switch (kind) {
    case StatKind::LRT: return g_tail(k, n - p, c);
    case StatKind::UIT: return gstar_tail(n, k, p, c);
    default: throw DomainError("component_tail: only the LRT and UIT have mixture null laws");
  }
}

double weighted_tail(StatKind kind, std::span<const double> w, double c, int n, int p) {
  check_np(n, p, "weighted_tail");
  if (static_cast<int>(w.size()) != p + 1) throw DomainError("weighted_tail: need p + 1 weights");
  double s = 0.0;
  for (int k = 0; k <= p; ++k)
    if (w[k] != 0.0) s += w[k] * component_tail(kind, k, c, n, p);
  return s;
}

double null_tail(StatKind kind, double c, int n, int p, const MixtureWeights& weights) {
  if (weights.p != p) throw DomainError("null_tail: weights were computed for a different p");
  return weighted_tail(kind, weights.w, c, n, p);
}

std::vector<double> max_principle_weights(int p) {
  std::vector<double> w(p + 1, 0.0);
  w[p] += 0.5;
  w[p - 1] += 0.5;
  return w;
}

double critval_max(StatKind kind, ConeKind cone, double alpha, int n, int p) {
  check_np(n, p, "critval_max");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("critval_max: alpha must lie in (0, 1)");
  if (kind != StatKind::LRT && kind != StatKind::UIT) throw DomainError("critval_max: kind must be lrt or uit");
  if (cone == ConeKind::Global) {
    return solve_critical([&](double c) { return g_tail(p, n - p, c); }, alpha);
  }
  const std::vector<double> w = max_principle_weights(p);
  return solve_critical([&](double c) { return weighted_tail(kind, w, c, n, p); }, alpha);
}

PValue sup_pvalue(StatKind kind, ConeKind cone, double value, int n, int p) {
  check_np(n, p, "sup_pvalue");
  if (std::isnan(value) || value < 0.0) throw DomainError("sup_pvalue: statistic must be >= 0");
  if (kind != StatKind::LRT && kind != StatKind::UIT) throw DomainError("sup_pvalue: kind must be lrt or uit");
  if (value == 0.0) return {1.0, cone == ConeKind::Orthant};
  if (cone == ConeKind::Global) return {g_tail(p, n - p, value), false};
  const std::vector<double> w = max_principle_weights(p);
  return {weighted_tail(kind, w, value, n, p), cone == ConeKind::Orthant};
}

double student_t_tail(double t, int df) {
  boost::math::students_t_distribution<double> dist(df);
  return boost::math::cdf(boost::math::complement(dist, t));
}

double fuit_critical(double alpha, int n, int p) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("fuit_critical: alpha must lie in (0, 1)");
  if (p < 1 || n < 2) throw DomainError("fuit_critical: need p >= 1 and n >= 2");
  boost::math::students_t_distribution<double> dist(n - 1);
  return boost::math::quantile(boost::math::complement(dist, alpha / p));
}

bool fuit_rejects(const StatisticResult& r, double alpha, int n) {
  if (r.kind != StatKind::FUIT) throw DomainError("fuit_rejects: not a FUIT result");
  const int p = static_cast<int>(r.t.size());
  if (r.cone.kind == ConeKind::Orthant) return r.value >= fuit_critical(alpha, n, p);
  const double one_sided = fuit_critical(alpha, n, p);
  const double two_sided = fuit_critical(0.5 * alpha, n, p);
  for (int j = 0; j + 1 < p; ++j)
    if (r.t(j) >= two_sided) return true;
  return r.t(p - 1) >= one_sided;
}

PValue fuit_pvalue(const StatisticResult& r, int n) {
  if (r.kind != StatKind::FUIT) throw DomainError("fuit_pvalue: not a FUIT result");
  const int p = static_cast<int>(r.t.size());
  double best = 1.0;
  for (int j = 0; j < p; ++j) {
    const bool two_sided = r.cone.kind == ConeKind::HalfSpace && j + 1 < p;
    const double pj = two_sided ? std::min(1.0, 2.0 * student_t_tail(r.t(j), n - 1)) : student_t_tail(r.t(j), n - 1);
    best = std::min(best, pj);
  }
  return {std::min(1.0, p * best), true};
}

double t2_critical(double alpha, int n, int p) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("t2_critical: alpha must lie in (0, 1)");
  if (n <= p || p < 1) throw DomainError("t2_critical: need n > p >= 1");
  boost::math::fisher_f_distribution<double> f(p, n - p);
  return (n - 1.0) * p / (n - p) * boost::math::quantile(boost::math::complement(f, alpha));
}

double t2_pvalue(double t2, int n, int p) {
  if (n <= p || p < 1) throw DomainError("t2_pvalue: need n > p >= 1");
  if (t2 <= 0.0) return 1.0;
  boost::math::fisher_f_distribution<double> f(p, n - p);
  return boost::math::cdf(boost::math::complement(f, t2 * (n - p) / ((n - 1.0) * p)));
}

void write_weights_csv(std::ostream& os, const MixtureWeights& w, const std::string& sigma_fingerprint) {
  os << "# p=" << w.p << ",sigma_sha256=" << sigma_fingerprint << "\n";
  os << "k,w,se,reps\n";
  for (int k = 0; k <= w.p; ++k) {
    os << k << "," << format_double(w.w[k]) << "," << format_double(w.se[k]) << "," << w.reps << "\n";
  }
}

}  // namespace conetest
