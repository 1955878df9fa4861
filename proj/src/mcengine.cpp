#include "conetest/mcengine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "conetest/errors.hpp"
#include "conetest/fingerprint.hpp"
#include "conetest/parallel.hpp"

namespace conetest {

namespace {

// Stream children used by the experiments. Fixed so reports stay reproducible.
enum Stream : std::uint64_t {
  kWeightsStream = 1,
  kNullStream = 2,
  kBayesStream = 3,
  kDataStream = 4,
  kConvexityStream = 20,
  kDualStream = 21,
  kFamilyStream = 100,
};

// Standard normal sample summaries; any N(theta, L L') dataset is theta + L z.
struct StdDraw {
  Vector mean;
  Matrix cov;
};

StdDraw draw_standard(int n, int p, Engine& eng) {
  std::normal_distribution<double> z01;
  Matrix z(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) z(i, j) = z01(eng);
  StdDraw d;
  d.mean = z.colwise().mean().transpose();
  const Matrix centered = z.rowwise() - d.mean.transpose();
  d.cov = centered.transpose() * centered / static_cast<double>(n - 1);
  return d;
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

SampleStats transform(const StdDraw& d, int n, const Vector& theta, const Matrix& l) {
  return SampleStats(n, theta + l * d.mean, SymPD(symmetrize(l * d.cov * l.transpose())));
}

Matrix random_pd_matrix(int p, Engine& eng) {
  std::normal_distribution<double> z01;
  Matrix a(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) a(i, j) = z01(eng);
  return symmetrize(a * a.transpose() / p + 0.2 * Matrix::Identity(p, p));
}

bool rejects(StatKind kind, const Cone& cone, const SampleStats& stats, double c, double alpha) {
  if (kind == StatKind::FUIT) return fuit_rejects(fuit(stats, cone), alpha, stats.n());
  return compute_statistic(kind, stats, cone).value >= c;
}

double binomial_se(double q, std::uint64_t reps) { return std::sqrt(q * (1.0 - q) / static_cast<double>(reps)); }

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

std::string theta_csv(const Vector& v) {
  std::string s;
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    if (j) s += ";";
    s += format_double(v(j));
  }
  return s;
}

std::string fingerprint_of(const Json& spec) { return sha256_hex(spec.dump()); }

Json header(const std::string& experiment, const Json& spec) {
  Json j;
  j["schema"] = 1;
  j["experiment"] = experiment;
  j["spec"] = spec;
  j["spec_sha256"] = fingerprint_of(spec);
  return j;
}

void check_np(int n, int p, const char* where) {
  if (p < 1) throw DomainError(std::string(where) + ": p must be >= 1");
  if (n < p + 2) throw DomainError(std::string(where) + ": need n >= p + 2");
}

void check_alpha(double alpha, const char* where) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError(std::string(where) + ": alpha must lie in (0, 1)");
}

}  // namespace

std::string to_string(CritMethod m) { return m == CritMethod::MaxPrinciple ? "max" : "bayes"; }

Json seed_to_json(const SeedSpec& s) {
  Json j;
  j["master_seed"] = s.master_seed;
  j["stream_id"] = s.stream_id;
  return j;
}

Json vector_to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

// ---------------------------------------------------------------------------

void ExperimentSpec::validate(bool power_run) const {
  check_np(n, p, "experiment");
  check_alpha(alpha, "experiment");
  if (reps < 1000) throw DomainError("experiment: reps must be >= 1000");
  if (sigma.rows() != p || sigma.cols() != p) throw DomainError("experiment: sigma must be p x p");
  SymPD check(sigma);
  if (kind == StatKind::T2 && cone != ConeKind::Global) throw DomainError("experiment: t2 requires the global cone");
  if (kind == StatKind::FUIT && cone == ConeKind::Global) throw DomainError("experiment: fuit requires orthant or halfspace");
  if (crit == CritMethod::BayesWeighted) {
    if (kind != StatKind::LRT && kind != StatKind::UIT) throw DomainError("experiment: bayes critical values need lrt or uit");
    if (cone == ConeKind::Global) throw DomainError("experiment: bayes critical values need a cone alternative");
  }
  const Cone c{cone, p};
  for (const auto& t : theta_grid) {
    if (t.size() != p) throw DomainError("experiment: theta grid point has the wrong dimension");
    if (power_run && !c.contains(t)) throw DomainError("experiment: theta grid point outside the " + c.name());
  }
}

Json ExperimentSpec::to_json() const {
  Json j;
  j["kind"] = conetest::to_string(kind);
  j["cone"] = conetest::to_string(cone);
  j["n"] = n;
  j["p"] = p;
  j["sigma_label"] = sigma_label;
  j["sigma"] = matrix_to_json(sigma);
  j["sigma_sha256"] = matrix_fingerprint(sigma);
  Json grid = Json::array();
  for (const auto& t : theta_grid) grid.push_back(vector_to_json(t));
  j["theta_grid"] = grid;
  j["alpha"] = alpha;
  j["reps"] = reps;
  j["seed"] = seed_to_json(seed);
  j["critmethod"] = conetest::to_string(crit);
  if (crit == CritMethod::BayesWeighted) j["prior"] = prior_label(prior);
  return j;
}

std::string ExperimentSpec::fingerprint() const { return fingerprint_of(to_json()); }

SymPD random_sigma(int p, const SeedSpec& seed) {
  if (p < 1) throw DomainError("random_sigma: p must be >= 1");
  Engine eng = make_engine(seed);
  const Matrix m = random_pd_matrix(p, eng);
  const Vector d = m.diagonal().cwiseSqrt().cwiseInverse();
  return SymPD(symmetrize(d.asDiagonal() * m * d.asDiagonal()));
}

double concentrating_rho(int k) {
  if (k < 0) throw DomainError("concentrating_rho: k must be >= 0");
  return k == 0 ? 0.0 : 1.0 - std::pow(10.0, -k);
}

SymPD concentrating_sigma(int p, int k) {
  const double rho = concentrating_rho(k);
  Matrix m = Matrix::Constant(p, p, rho);
  m.diagonal().setOnes();
  return SymPD(m);
}

SymPD m_matrix_inverse_sigma(int p) {
  Matrix prec = Matrix::Identity(p, p);
  for (int i = 0; i + 1 < p; ++i) prec(i, i + 1) = prec(i + 1, i) = -0.4;
  return SymPD(symmetrize(SymPD(prec).inverse()));
}

// ---------------------------------------------------------------------------

std::vector<double> default_c_grid(StatKind kind, int n, int p, int points) {
  if (points < 2) throw DomainError("default_c_grid: need at least 2 points");
  std::vector<double> alphas;
  if (points == 10) {
    alphas = {0.9, 0.7, 0.5, 0.3, 0.2, 0.1, 0.05, 0.025, 0.01, 0.005};
  } else {
    for (int i = 0; i < points; ++i) alphas.push_back(0.9 * std::pow(0.005 / 0.9, i / (points - 1.0)));
  }
  std::vector<double> c;
  for (double a : alphas) c.push_back(critval_max(kind, ConeKind::Orthant, a, n, p));
  return c;
}

NullValidationReport validate_null(const ExperimentSpec& spec, const std::vector<double>& c_grid,
                                   std::uint64_t weight_reps, int workers) {
  spec.validate(false);
  if (spec.kind != StatKind::LRT && spec.kind != StatKind::UIT) throw DomainError("validate_null: kind must be lrt or uit");
  if (spec.cone != ConeKind::Orthant) throw DomainError("validate_null: the mixture law is stated for the orthant");
  const SymPD sigma(spec.sigma);
  if (weight_reps == 0) weight_reps = std::max<std::uint64_t>(4 * spec.reps, 10000);

  NullValidationReport rep;
  rep.spec = spec;
  rep.weight_reps = weight_reps;
  rep.weights = mixture_weights(sigma, weight_reps, derive_stream(spec.seed, kWeightsStream), workers);

  const Cone cone{spec.cone, spec.p};
  const Vector zero = Vector::Zero(spec.p);
  const std::size_t m = c_grid.size();
  using Counts = std::vector<std::uint64_t>;
  const SeedSpec data_seed = derive_stream(spec.seed, kNullStream);
  const auto parts = run_blocks<Counts>(spec.reps, workers, [&](std::uint64_t block, std::uint64_t, std::uint64_t count) {
    Engine eng = block_engine(data_seed, block);
    Counts hits(m, 0);
    for (std::uint64_t i = 0; i < count; ++i) {
      const SampleStats stats = transform(draw_standard(spec.n, spec.p, eng), spec.n, zero, sigma.factor());
      const double v = compute_statistic(spec.kind, stats, cone).value;
      for (std::size_t j = 0; j < m; ++j)
        if (v >= c_grid[j]) ++hits[j];
    }
    return hits;
  });
  Counts total(m, 0);
  for (const auto& part : parts)
    for (std::size_t j = 0; j < m; ++j) total[j] += part[j];

  const double r = static_cast<double>(spec.reps);
  for (std::size_t j = 0; j < m; ++j) {
    NullValidationRow row;
    row.c = c_grid[j];
    row.empirical = static_cast<double>(total[j]) / r;
    row.mixture = null_tail(spec.kind, row.c, spec.n, spec.p, rep.weights);
    // Weight-estimation error: the mixture is a multinomial mean of component tails.
    double m1 = 0.0, m2 = 0.0;
    for (int k = 0; k <= spec.p; ++k) {
      const double g = component_tail(spec.kind, k, row.c, spec.n, spec.p);
      m1 += rep.weights.w[k] * g;
      m2 += rep.weights.w[k] * g * g;
    }
    const double var_w = std::max(0.0, m2 - m1 * m1) / static_cast<double>(weight_reps);
    const double q = std::clamp(row.mixture, 0.0, 1.0);
    row.se = std::sqrt(q * (1.0 - q) / r + var_w);
    const double dev = std::abs(row.empirical - row.mixture);
    row.flagged = dev > kSeBand * row.se;
    rep.max_abs_dev = std::max(rep.max_abs_dev, dev);
    if (row.flagged) ++rep.flagged;
    rep.rows.push_back(row);
  }
  return rep;
}

Json NullValidationReport::to_json() const {
  Json j = header("null", spec.to_json());
  j["weight_reps"] = weight_reps;
  j["weights"] = weights.w;
  j["weights_se"] = weights.se;
  Json rows_j = Json::array();
  for (const auto& r : rows) {
    Json x;
    x["c"] = r.c;
    x["empirical"] = r.empirical;
    x["mixture"] = r.mixture;
    x["se"] = r.se;
    x["flagged"] = r.flagged;
    rows_j.push_back(x);
  }
  j["rows"] = rows_j;
  j["max_abs_dev"] = max_abs_dev;
  j["flagged"] = flagged;
  j["passed"] = flagged == 0;
  return j;
}

std::string NullValidationReport::to_csv() const {
  std::ostringstream os;
  os << "c,empirical,mixture,se,flagged\n";
  for (const auto& r : rows) {
    os << format_double(r.c) << "," << format_double(r.empirical) << "," << format_double(r.mixture) << ","
       << format_double(r.se) << "," << (r.flagged ? 1 : 0) << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------

double resolve_critical(const ExperimentSpec& spec, int workers) {
  switch (spec.kind) {
    case StatKind::T2: return t2_critical(spec.alpha, spec.n, spec.p);
    case StatKind::FUIT: return fuit_critical(spec.alpha, spec.n, spec.p);
    default: break;
  }
  if (spec.crit == CritMethod::MaxPrinciple) return critval_max(spec.kind, spec.cone, spec.alpha, spec.n, spec.p);
  std::optional<SymPD> s_fixed;
  if (std::holds_alternative<HaarPrior>(spec.prior)) s_fixed = SymPD(spec.sigma);
  const BayesWeights b = bayes_weights(spec.prior, spec.n, spec.p, s_fixed, std::max<std::uint64_t>(spec.reps, 10000),
                                       derive_stream(spec.seed, kBayesStream), workers);
  return critval_bayes(spec.kind, spec.alpha, b);
}

PowerCurve power_curve(const ExperimentSpec& spec, int workers) {
  spec.validate(true);
  PowerCurve curve;
  curve.spec = spec;
  curve.critical = resolve_critical(spec, workers);
  const SymPD sigma(spec.sigma);
  const Cone cone{spec.cone, spec.p};
  const std::size_t m = spec.theta_grid.size();
  using Counts = std::vector<std::uint64_t>;
  const SeedSpec data_seed = derive_stream(spec.seed, kDataStream);
  const auto parts = run_blocks<Counts>(spec.reps, workers, [&](std::uint64_t block, std::uint64_t, std::uint64_t count) {
    Engine eng = block_engine(data_seed, block);
    Counts hits(m, 0);
    for (std::uint64_t i = 0; i < count; ++i) {
      const StdDraw d = draw_standard(spec.n, spec.p, eng);
      for (std::size_t g = 0; g < m; ++g) {
        const SampleStats stats = transform(d, spec.n, spec.theta_grid[g], sigma.factor());
        if (rejects(spec.kind, cone, stats, curve.critical, spec.alpha)) ++hits[g];
      }
    }
    return hits;
  });
  for (std::size_t g = 0; g < m; ++g) {
    std::uint64_t h = 0;
    for (const auto& part : parts) h += part[g];
    const double power = static_cast<double>(h) / static_cast<double>(spec.reps);
    curve.grid.push_back({spec.theta_grid[g], power, binomial_se(power, spec.reps)});
  }
  return curve;
}

Json PowerCurve::to_json() const {
  Json j = header("power", spec.to_json());
  j["critical"] = critical;
  Json g = Json::array();
  for (const auto& pt : grid) {
    Json x;
    x["theta"] = vector_to_json(pt.theta);
    x["power"] = pt.power;
    x["se"] = pt.se;
    g.push_back(x);
  }
  j["grid"] = g;
  return j;
}

std::string PowerCurve::to_csv() const {
  std::ostringstream os;
  os << "theta,power,se\n";
  for (const auto& pt : grid) os << theta_csv(pt.theta) << "," << format_double(pt.power) << "," << format_double(pt.se) << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------

std::vector<Vector> half_plane_grid(int n, int p, int points, double radius) {
  if (p < 2) throw DomainError("half_plane_grid: need p >= 2");
  if (points < 2) throw DomainError("half_plane_grid: need at least 2 points");
  const double pi = std::acos(-1.0);
  const double r = radius / std::sqrt(static_cast<double>(n));
  std::vector<Vector> grid;
  for (int j = 0; j < points; ++j) {
    const double phi = pi * j / (points - 1.0);
    Vector t = Vector::Zero(p);
    t(0) = r * std::cos(phi);
    t(p - 1) = std::max(0.0, r * std::sin(phi));
    grid.push_back(t);
  }
  return grid;
}

DominationReport domination_report(const ExperimentSpec& a, const ExperimentSpec& b, int workers) {
  if (a.cone != ConeKind::Orthant || b.cone != ConeKind::HalfSpace)
    throw DomainError("domination_report: spec A must be the orthant test and spec B the half-space test");
  if (a.kind != b.kind || (a.kind != StatKind::LRT && a.kind != StatKind::UIT))
    throw DomainError("domination_report: both specs must be the same kind, lrt or uit");
  if (a.n != b.n || a.p != b.p || a.sigma != b.sigma || a.alpha != b.alpha || a.reps != b.reps || !(a.seed == b.seed))
    throw DomainError("domination_report: spec mismatch in (n, p, sigma, alpha, reps, seed)");
  if (a.theta_grid.size() != b.theta_grid.size() ||
      !std::equal(a.theta_grid.begin(), a.theta_grid.end(), b.theta_grid.begin()))
    throw DomainError("domination_report: the theta grids differ");
  if (a.crit != CritMethod::MaxPrinciple || b.crit != CritMethod::MaxPrinciple)
    throw DomainError("domination_report: critical values come from the max principle");
  a.validate(false);
  b.validate(true);

  DominationReport rep;
  rep.spec_orthant = a;
  rep.spec_half = b;
  rep.c_orthant = critval_max(a.kind, ConeKind::Orthant, a.alpha, a.n, a.p);
  rep.c_half = critval_max(b.kind, ConeKind::HalfSpace, b.alpha, b.n, b.p);
  rep.same_critical = std::abs(rep.c_orthant - rep.c_half) <= 1e-9 * std::max(1.0, rep.c_half);

  const SymPD sigma(a.sigma);
  const Cone ca = Cone::orthant(a.p);
  const Cone cb = Cone::half_space(a.p);
  const std::size_t m = a.theta_grid.size();
  struct Partial {
    std::vector<std::uint64_t> hit_a, hit_b, only_b, only_a;
    std::uint64_t checks = 0, violations = 0;
  };
  const SeedSpec data_seed = derive_stream(a.seed, kDataStream);
  const auto parts = run_blocks<Partial>(a.reps, workers, [&](std::uint64_t block, std::uint64_t, std::uint64_t count) {
    Engine eng = block_engine(data_seed, block);
    Partial pt{std::vector<std::uint64_t>(m, 0), std::vector<std::uint64_t>(m, 0), std::vector<std::uint64_t>(m, 0),
               std::vector<std::uint64_t>(m, 0)};
    for (std::uint64_t i = 0; i < count; ++i) {
      const StdDraw d = draw_standard(a.n, a.p, eng);
      for (std::size_t g = 0; g < m; ++g) {
        const SampleStats stats = transform(d, a.n, a.theta_grid[g], sigma.factor());
        const double va = compute_statistic(a.kind, stats, ca).value;
        const double vb = compute_statistic(b.kind, stats, cb).value;
        ++pt.checks;
        if (vb < va - 1e-10 * (1.0 + std::abs(va))) ++pt.violations;
        const bool ra = va >= rep.c_orthant;
        const bool rb = vb >= rep.c_half;
        pt.hit_a[g] += ra;
        pt.hit_b[g] += rb;
        pt.only_b[g] += rb && !ra;
        pt.only_a[g] += ra && !rb;
      }
    }
    return pt;
  });
  std::vector<std::uint64_t> ha(m, 0), hb(m, 0), ob(m, 0), oa(m, 0);
  for (const auto& pt : parts) {
    rep.pathwise_checks += pt.checks;
    rep.pathwise_violations += pt.violations;
    for (std::size_t g = 0; g < m; ++g) {
      ha[g] += pt.hit_a[g];
      hb[g] += pt.hit_b[g];
      ob[g] += pt.only_b[g];
      oa[g] += pt.only_a[g];
    }
  }
  const double r = static_cast<double>(a.reps);
  for (std::size_t g = 0; g < m; ++g) {
    DominationPoint dp;
    dp.theta = a.theta_grid[g];
    dp.power_orthant = ha[g] / r;
    dp.power_half = hb[g] / r;
    dp.se_orthant = binomial_se(dp.power_orthant, a.reps);
    dp.se_half = binomial_se(dp.power_half, a.reps);
    // Paired difference d = 1{B} - 1{A} in {-1, 0, 1}.
    const double mean_d = (static_cast<double>(ob[g]) - static_cast<double>(oa[g])) / r;
    const double mean_d2 = (static_cast<double>(ob[g]) + static_cast<double>(oa[g])) / r;
    dp.se_diff = std::sqrt(std::max(0.0, mean_d2 - mean_d * mean_d) / r);
    const double diff = dp.power_half - dp.power_orthant;
    dp.violation = diff < -kSeBand * dp.se_diff;
    dp.strict = dp.se_diff > 0.0 && diff > kSeBand * dp.se_diff;
    rep.violations += dp.violation;
    rep.strict_points += dp.strict;
    rep.grid.push_back(dp);
  }
  return rep;
}

bool DominationReport::passed() const {
  return same_critical && pathwise_violations == 0 && violations == 0 && strict_points >= 1;
}

Json DominationReport::to_json() const {
  Json spec;
  spec["orthant"] = spec_orthant.to_json();
  spec["halfspace"] = spec_half.to_json();
  Json j = header("domination", spec);
  j["c_orthant"] = c_orthant;
  j["c_halfspace"] = c_half;
  j["same_critical"] = same_critical;
  j["pathwise_checks"] = pathwise_checks;
  j["pathwise_violations"] = pathwise_violations;
  Json g = Json::array();
  for (const auto& dp : grid) {
    Json x;
    x["theta"] = vector_to_json(dp.theta);
    x["power_orthant"] = dp.power_orthant;
    x["power_halfspace"] = dp.power_half;
    x["se_orthant"] = dp.se_orthant;
    x["se_halfspace"] = dp.se_half;
    x["se_diff"] = dp.se_diff;
    x["strict"] = dp.strict;
    x["violation"] = dp.violation;
    g.push_back(x);
  }
  j["grid"] = g;
  j["strict_points"] = strict_points;
  j["violations"] = violations;
  j["passed"] = passed();
  return j;
}

std::string DominationReport::to_csv() const {
  std::ostringstream os;
  os << "theta,power_orthant,se_orthant,power_halfspace,se_halfspace,se_diff,strict,violation\n";
  for (const auto& dp : grid) {
    os << theta_csv(dp.theta) << "," << format_double(dp.power_orthant) << "," << format_double(dp.se_orthant) << ","
       << format_double(dp.power_half) << "," << format_double(dp.se_half) << "," << format_double(dp.se_diff) << ","
       << (dp.strict ? 1 : 0) << "," << (dp.violation ? 1 : 0) << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------

SimilarityBiasReport similarity_and_bias(int n, int p, const std::vector<LabeledSigma>& sigmas,
                                         const std::vector<Vector>& bias_thetas, double alpha,
                                         std::uint64_t reps, const SeedSpec& seed, int workers) {
  check_np(n, p, "similarity_and_bias");
  check_alpha(alpha, "similarity_and_bias");
  if (reps < 1000) throw DomainError("similarity_and_bias: reps must be >= 1000");
  const Cone orth = Cone::orthant(p);
  for (const auto& t : bias_thetas) {
    if (t.size() != p) throw DomainError("similarity_and_bias: theta has the wrong dimension");
    if (!orth.contains(t)) throw DomainError("similarity_and_bias: bias search points must lie in the orthant");
  }
  for (const auto& s : sigmas)
    if (s.sigma.dim() != p) throw DomainError("similarity_and_bias: sigma has the wrong dimension");

  SimilarityBiasReport rep;
  rep.n = n;
  rep.p = p;
  rep.alpha = alpha;
  rep.reps = reps;
  rep.seed = seed;
  const Cone half = Cone::half_space(p);
  const StatKind kinds[2] = {StatKind::LRT, StatKind::UIT};
  double c_half[2], c_orth[2];
  for (int k = 0; k < 2; ++k) {
    c_half[k] = critval_max(kinds[k], ConeKind::HalfSpace, alpha, n, p);
    c_orth[k] = critval_max(kinds[k], ConeKind::Orthant, alpha, n, p);
  }
  const double se_alpha = binomial_se(alpha, reps);
  const std::size_t m = bias_thetas.size();

  for (std::size_t s = 0; s < sigmas.size(); ++s) {
    const Matrix& l = sigmas[s].sigma.factor();
    // Layout: [null half LRT, null half UIT, then (theta, kind) orthant hits].
    using Counts = std::vector<std::uint64_t>;
    const SeedSpec sseed = derive_stream(seed, kFamilyStream + s);
    const auto parts = run_blocks<Counts>(reps, workers, [&](std::uint64_t block, std::uint64_t, std::uint64_t count) {
      Engine eng = block_engine(sseed, block);
      Counts h(2 + 2 * m, 0);
      const Vector zero = Vector::Zero(p);
      for (std::uint64_t i = 0; i < count; ++i) {
        const StdDraw d = draw_standard(n, p, eng);
        const SampleStats null_stats = transform(d, n, zero, l);
        for (int k = 0; k < 2; ++k) h[k] += compute_statistic(kinds[k], null_stats, half).value >= c_half[k];
        for (std::size_t g = 0; g < m; ++g) {
          const SampleStats stats = transform(d, n, bias_thetas[g], l);
          for (int k = 0; k < 2; ++k) h[2 + 2 * g + k] += compute_statistic(kinds[k], stats, orth).value >= c_orth[k];
        }
      }
      return h;
    });
    Counts total(2 + 2 * m, 0);
    for (const auto& part : parts)
      for (std::size_t i = 0; i < total.size(); ++i) total[i] += part[i];
    const std::string fp = matrix_fingerprint(sigmas[s].sigma.matrix());
    for (int k = 0; k < 2; ++k) {
      SimilarityRow row;
      row.sigma_label = sigmas[s].label;
      row.sigma_fingerprint = fp;
      row.kind = kinds[k];
      row.rate = static_cast<double>(total[k]) / static_cast<double>(reps);
      row.se = se_alpha;
      row.within = std::abs(row.rate - alpha) <= kSeBand * se_alpha;
      rep.max_dev_se = std::max(rep.max_dev_se, std::abs(row.rate - alpha) / se_alpha);
      rep.similarity.push_back(row);
    }
    for (std::size_t g = 0; g < m; ++g) {
      rep.bias_grid.emplace_back(sigmas[s].label, bias_thetas[g]);
      for (int k = 0; k < 2; ++k) {
        const double power = static_cast<double>(total[2 + 2 * g + k]) / static_cast<double>(reps);
        if (power < alpha - kSeBand * se_alpha)
          rep.witnesses.push_back({sigmas[s].label, bias_thetas[g], kinds[k], power, binomial_se(power, reps)});
      }
    }
  }
  return rep;
}

bool SimilarityBiasReport::similarity_passed() const {
  return std::all_of(similarity.begin(), similarity.end(), [](const SimilarityRow& r) { return r.within; });
}

Json SimilarityBiasReport::to_json() const {
  Json spec;
  spec["n"] = n;
  spec["p"] = p;
  spec["alpha"] = alpha;
  spec["reps"] = reps;
  spec["seed"] = seed_to_json(seed);
  Json sig = Json::array();
  for (const auto& r : similarity)
    if (r.kind == StatKind::LRT) sig.push_back({{"label", r.sigma_label}, {"sha256", r.sigma_fingerprint}});
  spec["sigmas"] = sig;
  Json j = header("similarity", spec);
  Json rows = Json::array();
  for (const auto& r : similarity) {
    rows.push_back({{"sigma", r.sigma_label}, {"kind", conetest::to_string(r.kind)}, {"rate", r.rate},
                    {"se", r.se}, {"within", r.within}});
  }
  j["similarity"] = rows;
  j["max_dev_se"] = max_dev_se;
  j["bias_points"] = bias_grid.size();
  Json w = Json::array();
  for (const auto& b : witnesses) {
    w.push_back({{"sigma", b.sigma_label}, {"theta", vector_to_json(b.theta)}, {"kind", conetest::to_string(b.kind)},
                 {"power", b.power}, {"se", b.se}});
  }
  j["bias_witnesses"] = w;
  j["passed"] = similarity_passed();
  return j;
}

std::string SimilarityBiasReport::to_csv() const {
  std::ostringstream os;
  os << "sigma,kind,rate,se,within\n";
  for (const auto& r : similarity) {
    os << r.sigma_label << "," << conetest::to_string(r.kind) << "," << format_double(r.rate) << ","
       << format_double(r.se) << "," << (r.within ? 1 : 0) << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------

GeometryKind parse_geometry_kind(const std::string& s) {
  if (s == "uit-orthant") return GeometryKind::UitOrthant;
  if (s == "uit-halfspace") return GeometryKind::UitHalfSpace;
  if (s == "t2") return GeometryKind::T2;
  throw DomainError("unknown geometry kind '" + s + "' (expected uit-orthant, uit-halfspace or t2)");
}

std::string to_string(GeometryKind k) {
  switch (k) {
    case GeometryKind::UitOrthant: return "uit-orthant";
    case GeometryKind::UitHalfSpace: return "uit-halfspace";
    case GeometryKind::T2: return "t2";
  }
  return "?";
}

GeometryReport geometry_probe(GeometryKind kind, int n, int p, std::uint64_t trials, double alpha,
                              const SeedSpec& seed, int workers) {
  check_np(n, p, "geometry_probe");
  check_alpha(alpha, "geometry_probe");
  if (trials < 1000) throw DomainError("geometry_probe: trials must be >= 1000");

  GeometryReport rep;
  rep.kind = kind;
  rep.n = n;
  rep.p = p;
  rep.alpha = alpha;
  rep.trials = trials;
  rep.seed = seed;
  const bool is_t2 = kind == GeometryKind::T2;
  // The T^2 probe uses orthant dual points for its contrast.
  const Cone cone = kind == GeometryKind::UitHalfSpace ? Cone::half_space(p) : Cone::orthant(p);
  const double t2_crit = t2_critical(alpha, n, p);
  const double c_uit = critval_max(StatKind::UIT, cone.kind, alpha, n, p);
  rep.critical = is_t2 ? t2_crit : c_uit;
  auto statistic = [&](const Vector& mean, const Matrix& cov) {
    const SampleStats stats(n, mean, SymPD(symmetrize(cov)));
    return is_t2 ? hotelling_t2(stats).value : uit(stats, cone).value;
  };
  auto accepted = [&](double v) { return v < rep.critical; };

  // (i) Midpoints of accepted pairs. Each endpoint comes from its own random
  // covariance so the pairs spread over the joint (x-bar, S) space.
  struct ConvexPartial {
    std::uint64_t joint = 0, fixed = 0;
    double worst = 0.0;
    std::optional<GeometryReport::Violation> example;
  };
  const SeedSpec cseed = derive_stream(seed, kConvexityStream);
  const auto cparts = run_blocks<ConvexPartial>(trials, workers, [&](std::uint64_t block, std::uint64_t, std::uint64_t count) {
    Engine eng = block_engine(cseed, block);
    const Vector zero = Vector::Zero(p);
    auto accepted_point = [&](const Matrix& l) {
      for (;;) {
        const StdDraw d = draw_standard(n, p, eng);
        Vector mean = l * d.mean;
        Matrix cov = symmetrize(l * d.cov * l.transpose());
        if (accepted(statistic(mean, cov))) return std::make_pair(mean, cov);
      }
    };
    ConvexPartial pt;
    for (std::uint64_t i = 0; i < count; ++i) {
      const Matrix l1 = pd_factor(random_pd_matrix(p, eng));
      const Matrix l2 = pd_factor(random_pd_matrix(p, eng));
      const auto [m1, s1] = accepted_point(l1);
      const auto [m2, s2] = accepted_point(l2);
      const double v = statistic(0.5 * (m1 + m2), 0.5 * (s1 + s2));
      pt.worst = std::max(pt.worst, v / rep.critical);
      if (!accepted(v)) {
        ++pt.joint;
        if (!pt.example) pt.example = GeometryReport::Violation{m1, m2, s1, s2, statistic(m1, s1), statistic(m2, s2), v};
      }
      // Second mean under the first covariance for the x-bar-only probe.
      Vector m3;
      for (;;) {
        const StdDraw d = draw_standard(n, p, eng);
        m3 = l1 * d.mean;
        if (accepted(statistic(m3, s1))) break;
      }
      if (!accepted(statistic(0.5 * (m1 + m3), s1))) ++pt.fixed;
    }
    return pt;
  });
  for (const auto& pt : cparts) {
    rep.convexity_violations += pt.joint;
    rep.fixed_s_violations += pt.fixed;
    rep.worst_midpoint_ratio = std::max(rep.worst_midpoint_ratio, pt.worst);
    if (!rep.example && pt.example) rep.example = pt.example;
  }

  // (ii) Dual-cone points x-bar = -t S u, with u >= 0 (orthant) or u = lambda e_p (half-space).
  struct DualPartial {
    std::uint64_t points = 0, zero = 0, acc = 0, member_fail = 0;
  };
  const SeedSpec dseed = derive_stream(seed, kDualStream);
  auto dual_direction = [&](const Matrix& s, Engine& eng) {
    std::normal_distribution<double> z01;
    Vector u = Vector::Zero(p);
    if (cone.kind == ConeKind::Orthant) {
      for (int j = 0; j < p; ++j) u(j) = std::abs(z01(eng));
    } else {
      u(p - 1) = std::abs(z01(eng)) + 1e-3;
    }
    return Vector(-(s * u));
  };
  const auto dparts = run_blocks<DualPartial>(trials, workers, [&](std::uint64_t block, std::uint64_t first, std::uint64_t count) {
    Engine eng = block_engine(dseed, block);
    DualPartial pt;
    for (std::uint64_t i = 0; i < count; ++i) {
      const Matrix l = pd_factor(random_pd_matrix(p, eng));
      const StdDraw d = draw_standard(n, p, eng);
      const Matrix s = symmetrize(l * d.cov * l.transpose());
      const double scale = std::pow(10.0, static_cast<double>((first + i) % 4));
      const Vector mean = scale * dual_direction(s, eng);
      const SampleStats stats(n, mean, SymPD(s));
      const double u = uit(stats, cone).value;
      ++pt.points;
      // Exactly zero on the orthant; on the half-space the regressed head is zero up to rounding.
      if (u <= 1e-12) ++pt.zero;
      if (u < c_uit) ++pt.acc;
      if (!dual_member(mean, Metric(SymPD(s)), cone, 1e-9)) ++pt.member_fail;
    }
    return pt;
  });
  for (const auto& pt : dparts) {
    rep.dual_points += pt.points;
    rep.dual_zero_statistic += pt.zero;
    rep.dual_accepted += pt.acc;
    rep.dual_member_failures += pt.member_fail;
  }

  // (iii) Walk out along one dual ray until T^2 rejects while the UIT still accepts.
  {
    Engine eng = make_engine(derive_stream(dseed, ~0ULL));
    const Matrix l = pd_factor(random_pd_matrix(p, eng));
    const StdDraw d = draw_standard(n, p, eng);
    const Matrix s = symmetrize(l * d.cov * l.transpose());
    const Vector dir = dual_direction(s, eng);
    for (double t = 1e-3; t < 1e12; t *= 2.0) {
      const SampleStats stats(n, t * dir, SymPD(s));
      const double t2 = hotelling_t2(stats).value;
      const double u = uit(stats, cone).value;
      if (t2 >= t2_crit && u < c_uit) {
        rep.contrast_found = true;
        rep.contrast_scale = t;
        rep.contrast_t2 = t2;
        rep.contrast_t2_critical = t2_crit;
        rep.contrast_uit = u;
        rep.contrast_mean = stats.mean();
        break;
      }
    }
  }
  return rep;
}

bool GeometryReport::passed() const {
  if (kind == GeometryKind::T2) return convexity_violations == 0 && contrast_found;
  return convexity_violations == 0 && dual_zero_statistic == dual_points && dual_accepted == dual_points &&
         dual_member_failures == 0 && contrast_found;
}

Json GeometryReport::to_json() const {
  Json spec;
  spec["kind"] = to_string(kind);
  spec["n"] = n;
  spec["p"] = p;
  spec["alpha"] = alpha;
  spec["trials"] = trials;
  spec["seed"] = seed_to_json(seed);
  Json j = header("geometry", spec);
  j["critical"] = critical;
  j["convexity"] = {{"trials", trials},
                    {"joint_violations", convexity_violations},
                    {"fixed_s_violations", fixed_s_violations},
                    {"worst_midpoint_ratio", worst_midpoint_ratio}};
  if (example) {
    j["convexity"]["example"] = {{"mean1", vector_to_json(example->mean1)}, {"cov1", matrix_to_json(example->cov1)},
                                 {"stat1", example->stat1},                 {"mean2", vector_to_json(example->mean2)},
                                 {"cov2", matrix_to_json(example->cov2)},   {"stat2", example->stat2},
                                 {"stat_mid", example->stat_mid}};
  }
  j["dual_cone"] = {{"points", dual_points},
                    {"zero_statistic", dual_zero_statistic},
                    {"accepted", dual_accepted},
                    {"member_failures", dual_member_failures}};
  Json c;
  c["found"] = contrast_found;
  if (contrast_found) {
    c["scale"] = contrast_scale;
    c["mean"] = vector_to_json(contrast_mean);
    c["t2"] = contrast_t2;
    c["t2_critical"] = contrast_t2_critical;
    c["uit"] = contrast_uit;
  }
  j["t2_contrast"] = c;
  j["passed"] = passed();
  return j;
}

// ---------------------------------------------------------------------------

SupApproachReport sup_approach(StatKind kind, int p, int n, double alpha, int K, std::uint64_t reps,
                               const SeedSpec& seed, int workers) {
  check_np(n, p, "sup_approach");
  check_alpha(alpha, "sup_approach");
  if (K < 3) throw DomainError("sup_approach: K must be >= 3");
  if (kind != StatKind::LRT && kind != StatKind::UIT) throw DomainError("sup_approach: kind must be lrt or uit");
  if (reps < 1000) throw DomainError("sup_approach: reps must be >= 1000");

  SupApproachReport rep;
  rep.kind = kind;
  rep.n = n;
  rep.p = p;
  rep.alpha = alpha;
  rep.reps = reps;
  rep.seed = seed;
  rep.critical = critval_max(kind, ConeKind::Orthant, alpha, n, p);
  std::vector<Matrix> factors;
  for (int k = 0; k < K; ++k) factors.push_back(concentrating_sigma(p, k).factor());
  const Cone cone = Cone::orthant(p);
  const Vector zero = Vector::Zero(p);
  using Counts = std::vector<std::uint64_t>;
  const SeedSpec data_seed = derive_stream(seed, kNullStream);
  const auto parts = run_blocks<Counts>(reps, workers, [&](std::uint64_t block, std::uint64_t, std::uint64_t count) {
    Engine eng = block_engine(data_seed, block);
    Counts h(K, 0);
    for (std::uint64_t i = 0; i < count; ++i) {
      const StdDraw d = draw_standard(n, p, eng);
      for (int k = 0; k < K; ++k)
        h[k] += compute_statistic(kind, transform(d, n, zero, factors[k]), cone).value >= rep.critical;
    }
    return h;
  });
  for (int k = 0; k < K; ++k) {
    std::uint64_t h = 0;
    for (const auto& part : parts) h += part[k];
    const double rate = static_cast<double>(h) / static_cast<double>(reps);
    rep.rows.push_back({k, concentrating_rho(k), rate, binomial_se(rate, reps)});
  }
  rep.nondecreasing = true;
  for (int k = 0; k + 1 < K; ++k) {
    const auto& a = rep.rows[k];
    const auto& b = rep.rows[k + 1];
    if (b.rate < a.rate - kSeBand * std::hypot(a.se, b.se)) rep.nondecreasing = false;
  }
  rep.ends_near_alpha = std::abs(rep.rows.back().rate - alpha) <= kSeBand * binomial_se(alpha, reps);
  rep.starts_below_alpha = rep.rows.front().rate < alpha;
  return rep;
}

Json SupApproachReport::to_json() const {
  Json spec;
  spec["kind"] = conetest::to_string(kind);
  spec["n"] = n;
  spec["p"] = p;
  spec["alpha"] = alpha;
  spec["K"] = rows.size();
  spec["reps"] = reps;
  spec["seed"] = seed_to_json(seed);
  Json j = header("sup", spec);
  j["critical"] = critical;
  Json r = Json::array();
  for (const auto& row : rows) r.push_back({{"k", row.k}, {"rho", row.rho}, {"rate", row.rate}, {"se", row.se}});
  j["rows"] = r;
  j["nondecreasing"] = nondecreasing;
  j["ends_near_alpha"] = ends_near_alpha;
  j["starts_below_alpha"] = starts_below_alpha;
  j["passed"] = passed();
  return j;
}

std::string SupApproachReport::to_csv() const {
  std::ostringstream os;
  os << "k,rho,rate,se\n";
  for (const auto& row : rows)
    os << row.k << "," << format_double(row.rho) << "," << format_double(row.rate) << "," << format_double(row.se) << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------

FuitSizeReport fuit_size(int n, int p, const LabeledSigma& sigma, double alpha, std::uint64_t reps,
                         const SeedSpec& seed, int workers) {
  check_np(n, p, "fuit_size");
  check_alpha(alpha, "fuit_size");
  if (sigma.sigma.dim() != p) throw DomainError("fuit_size: sigma has the wrong dimension");
  if (reps < 1000) throw DomainError("fuit_size: reps must be >= 1000");
  FuitSizeReport rep;
  rep.n = n;
  rep.p = p;
  rep.alpha = alpha;
  rep.reps = reps;
  rep.sigma_label = sigma.label;
  rep.critical = fuit_critical(alpha, n, p);
  const Cone cone = Cone::orthant(p);
  const Vector zero = Vector::Zero(p);
  const SeedSpec data_seed = derive_stream(seed, kNullStream);
  const auto parts = run_blocks<std::uint64_t>(reps, workers, [&](std::uint64_t block, std::uint64_t, std::uint64_t count) {
    Engine eng = block_engine(data_seed, block);
    std::uint64_t h = 0;
    for (std::uint64_t i = 0; i < count; ++i)
      h += fuit_rejects(fuit(transform(draw_standard(n, p, eng), n, zero, sigma.sigma.factor()), cone), alpha, n);
    return h;
  });
  std::uint64_t h = 0;
  for (auto part : parts) h += part;
  rep.rate = static_cast<double>(h) / static_cast<double>(reps);
  rep.se = binomial_se(alpha, reps);
  return rep;
}

Json FuitSizeReport::to_json() const {
  Json spec{{"n", n}, {"p", p}, {"alpha", alpha}, {"reps", reps}, {"sigma", sigma_label}};
  Json j = header("fuit", spec);
  j["critical"] = critical;
  j["rate"] = rate;
  j["se"] = se;
  j["passed"] = passed();
  return j;
}

// ---------------------------------------------------------------------------

CompoundNullReport compound_null(StatKind kind, const InvWishartPrior& prior, int n, int p, double alpha,
                                 const BayesWeights& weights, std::uint64_t reps, const SeedSpec& seed, int workers) {
  check_np(n, p, "compound_null");
  if (weights.n != n || weights.p != p) throw DomainError("compound_null: weights were computed for another (n, p)");
  if (reps < 1000) throw DomainError("compound_null: reps must be >= 1000");
  CompoundNullReport rep;
  rep.kind = kind;
  rep.n = n;
  rep.p = p;
  rep.alpha = alpha;
  rep.reps = reps;
  rep.weights = weights;
  rep.critical = critval_bayes(kind, alpha, weights);
  const Cone cone = Cone::orthant(p);
  const Vector zero = Vector::Zero(p);
  const SeedSpec data_seed = derive_stream(seed, kNullStream);
  const auto parts = run_blocks<std::uint64_t>(reps, workers, [&](std::uint64_t block, std::uint64_t, std::uint64_t count) {
    Engine eng = block_engine(data_seed, block);
    std::uint64_t h = 0;
    for (std::uint64_t i = 0; i < count; ++i) {
      const SymPD sigma = draw_inverse_wishart(prior, eng);
      h += compute_statistic(kind, sample_dataset(n, zero, sigma, eng), cone).value >= rep.critical;
    }
    return h;
  });
  std::uint64_t h = 0;
  for (auto part : parts) h += part;
  rep.rate = static_cast<double>(h) / static_cast<double>(reps);
  rep.se = binomial_se(alpha, reps);
  return rep;
}

bool CompoundNullReport::passed() const { return std::abs(rate - alpha) <= kSeBand * se; }

Json CompoundNullReport::to_json() const {
  Json spec{{"kind", conetest::to_string(kind)}, {"n", n}, {"p", p}, {"alpha", alpha}, {"reps", reps},
            {"prior", prior_label(weights.prior)}, {"weight_reps", weights.reps}};
  Json j = header("bayes", spec);
  j["weights"] = weights.b;
  j["weights_se"] = weights.se;
  j["critical"] = critical;
  j["rate"] = rate;
  j["se"] = se;
  j["passed"] = passed();
  return j;
}

}  // namespace conetest
