#include "conetest/cli.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "conetest/errors.hpp"
#include "conetest/fingerprint.hpp"
#include "conetest/reports.hpp"

namespace conetest {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, sep)) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == sep) cells.emplace_back();
  return cells;
}

bool parse_number(const std::string& cell, double& v) {
  if (cell.empty()) return false;
  const char* first = cell.data();
  const char* last = first + cell.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v, std::chars_format::general);
  return ec == std::errc() && ptr == last && std::isfinite(v);
}

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  for (const auto& cell : split(text, ',')) {
    double v = 0.0;
    if (!parse_number(cell, v)) throw DomainError(flag + ": '" + cell + "' is not a number");
    out.push_back(v);
  }
  if (out.empty()) throw DomainError(flag + ": empty list");
  return out;
}

// Resolved numeric options shared by the subcommands.
struct Options {
  std::string cone;
  std::string kind;
  std::string critmethod = "max";
  std::string prior;
  std::string input;
  std::string out;
  std::string format = "json";
  std::string sigma;
  std::string table = "weights";
  std::string alphas;
  std::string name;
  double alpha = 0.05;
  std::uint64_t reps = 0;
  std::uint64_t trials = 10000;
  std::uint64_t seed = 0;
  int p = 2;
  int n = 0;
  int K = 5;
  bool seed_given = false;
};

std::uint64_t fresh_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("--alpha must lie in (0, 1)");
}

void emit(const Options& o, const std::string& content, std::ostream& out) {
  if (o.out.empty()) {
    out << content;
  } else {
    write_file_atomic(o.out, content);
  }
}

ConeKind default_cone(StatKind kind) { return kind == StatKind::T2 ? ConeKind::Global : ConeKind::Orthant; }

void check_kind_cone(StatKind kind, ConeKind cone) {
  if (kind == StatKind::T2 && cone != ConeKind::Global) throw DomainError("--kind t2 requires --cone global");
  if (kind == StatKind::FUIT && cone == ConeKind::Global) throw DomainError("--kind fuit requires --cone orthant or halfspace");
}

// ---------------------------------------------------------------------------

int cmd_test(const Options& o, std::ostream& out) {
  if (o.input.empty()) throw DomainError("test: --input is required (a path, or - for stdin)");
  const StatKind kind = o.kind.empty() ? StatKind::UIT : parse_stat_kind(o.kind);
  const ConeKind cone_kind = o.cone.empty() ? default_cone(kind) : parse_cone_kind(o.cone);
  check_kind_cone(kind, cone_kind);
  check_alpha(o.alpha);
  const bool bayes = o.critmethod == "bayes";
  if (!bayes && o.critmethod != "max") throw DomainError("--critmethod must be max or bayes");
  if (bayes && (kind == StatKind::T2 || kind == StatKind::FUIT || cone_kind == ConeKind::Global))
    throw DomainError("--critmethod bayes needs --kind lrt or uit on a cone alternative");

  Matrix rows;
  if (o.input == "-") {
    rows = read_csv_matrix(std::cin, "<stdin>");
  } else {
    std::ifstream in(o.input);
    if (!in) throw DomainError("cannot open input '" + o.input + "'");
    rows = read_csv_matrix(in, o.input);
  }
  const int n = static_cast<int>(rows.rows());
  const int p = static_cast<int>(rows.cols());
  if (n < p + 2) {
    throw DomainError(o.input + ": " + std::to_string(n) + " data rows for " + std::to_string(p) +
                      " columns; need n >= p + 2");
  }
  std::optional<SampleStats> stats;
  try {
    stats = summarize(rows);
  } catch (const NotPositiveDefinite& e) {
    throw DomainError(o.input + ": sample covariance is singular at column " + std::to_string(e.pivot() + 1));
  }

  const Cone cone{cone_kind, p};
  const StatisticResult r = compute_statistic(kind, *stats, cone);
  Json j;
  j["schema"] = 1;
  j["command"] = "test";
  j["kind"] = to_string(kind);
  j["cone"] = to_string(cone_kind);
  j["n"] = n;
  j["p"] = p;
  j["alpha"] = o.alpha;
  if (std::isnan(r.value)) {
    j["value"] = nullptr;
  } else {
    j["value"] = r.value;
  }
  j["face"] = r.face.one_based();
  j["critmethod"] = bayes ? "bayes" : "max";

  double critical = 0.0;
  bool reject = false;
  PValue pv;
  switch (kind) {
    case StatKind::T2:
      critical = t2_critical(o.alpha, n, p);
      reject = r.value >= critical;
      pv = {t2_pvalue(r.value, n, p), false};
      break;
    case StatKind::FUIT:
      critical = fuit_critical(o.alpha, n, p);
      reject = fuit_rejects(r, o.alpha, n);
      pv = fuit_pvalue(r, n);
      j["t"] = vector_to_json(r.t);
      if (cone_kind == ConeKind::HalfSpace) j["critical_two_sided"] = fuit_critical(0.5 * o.alpha, n, p);
      break;
    default:
      if (bayes) {
        const SeedSpec seed{o.seed, 0};
        const PriorSpec prior = o.prior.empty() ? default_prior(p) : parse_prior(o.prior, p);
        std::optional<SymPD> s_fixed;
        if (std::holds_alternative<HaarPrior>(prior)) s_fixed = stats->cov();
        const BayesWeights w = bayes_weights(prior, n, p, s_fixed, std::max<std::uint64_t>(o.reps, 10000), seed);
        critical = critval_bayes(kind, o.alpha, w);
        pv = {bayes_pvalue(kind, r.value, w), false};
        j["prior"] = prior_label(prior);
        j["weights"] = w.b;
        j["weights_se"] = w.se;
        j["weight_reps"] = w.reps;
        j["seed"] = o.seed;
      } else {
        critical = critval_max(kind, cone_kind, o.alpha, n, p);
        pv = sup_pvalue(kind, cone_kind, r.value, n, p);
      }
      reject = r.value >= critical;
      break;
  }
  j["critical"] = critical;
  j["decision"] = reject ? "reject" : "accept";
  j["p_value"] = pv.value;
  j["conservative"] = pv.conservative;

  if (o.format == "csv") {
    std::ostringstream os;
    os << "kind,cone,n,p,value,critical,decision,p_value,conservative\n";
    os << to_string(kind) << "," << to_string(cone_kind) << "," << n << "," << p << ","
       << (std::isnan(r.value) ? std::string("nan") : format_double(r.value)) << "," << format_double(critical) << ","
       << (reject ? "reject" : "accept") << "," << format_double(pv.value) << "," << (pv.conservative ? 1 : 0) << "\n";
    emit(o, os.str(), out);
  } else {
    emit(o, j.dump(2) + "\n", out);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_tables(const Options& o, std::ostream& out) {
  const int p = o.p;
  const int n = o.n > 0 ? o.n : p + 10;
  if (p < 1 || p > kMaxEnumerationDim) throw DomainError("--p must lie in [1, 20]");
  if (n < p + 2) throw DomainError("--n must be >= p + 2");
  const bool bayes = o.critmethod == "bayes";
  if (!bayes && o.critmethod != "max") throw DomainError("--critmethod must be max or bayes");
  const std::uint64_t reps = o.reps > 0 ? o.reps : 100000;
  const SeedSpec seed{o.seed, 0};
  std::ostringstream os;

  std::optional<BayesWeights> bw;
  auto bayes_w = [&]() -> const BayesWeights& {
    if (!bw) {
      const PriorSpec prior = o.prior.empty() ? default_prior(p) : parse_prior(o.prior, p);
      std::optional<SymPD> s_fixed;
      if (std::holds_alternative<HaarPrior>(prior))
        s_fixed = parse_sigma(o.sigma.empty() ? "identity" : o.sigma, p, derive_stream(seed, 1)).sigma;
      bw = bayes_weights(prior, n, p, s_fixed, reps, seed);
    }
    return *bw;
  };

  if (o.table == "weights") {
    if (bayes) {
      write_bayes_weights_csv(os, bayes_w());
    } else {
      const LabeledSigma s = parse_sigma(o.sigma.empty() ? "identity" : o.sigma, p, derive_stream(seed, 1));
      write_weights_csv(os, mixture_weights(s.sigma, reps, seed), matrix_fingerprint(s.sigma.matrix()));
    }
  } else if (o.table == "critvals") {
    const std::vector<double> alphas =
        o.alphas.empty() ? std::vector<double>{0.2, 0.1, 0.05, 0.025, 0.01, 0.005} : parse_list(o.alphas, "--alphas");
    for (double a : alphas) check_alpha(a);
    os << "# n=" << n << ",p=" << p << ",method=" << (bayes ? "bayes" : "max");
    if (bayes) os << ",prior=" << prior_label(bayes_w().prior) << ",seed=" << o.seed;
    os << "\nalpha,lrt,uit\n";
    for (double a : alphas) {
      const double cl = bayes ? critval_bayes(StatKind::LRT, a, bayes_w()) : critval_max(StatKind::LRT, ConeKind::Orthant, a, n, p);
      const double cu = bayes ? critval_bayes(StatKind::UIT, a, bayes_w()) : critval_max(StatKind::UIT, ConeKind::Orthant, a, n, p);
      os << format_double(a) << "," << format_double(cl) << "," << format_double(cu) << "\n";
    }
  } else {
    throw DomainError("--table must be weights or critvals");
  }
  emit(o, os.str(), out);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct Emitted {
  std::string name;
  std::string fingerprint;
  Json json;
  std::string csv;
  bool passed = true;
};

int write_experiment(const Options& o, const Emitted& e, std::ostream& out) {
  const std::filesystem::path dir = o.out.empty() ? std::filesystem::path(".") : std::filesystem::path(o.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DomainError("cannot create output directory '" + dir.string() + "': " + ec.message());
  const std::string body = e.json.dump(2) + "\n";
  write_file_atomic(dir / report_filename(e.name, e.fingerprint, "json"), body);
  if (!e.csv.empty()) write_file_atomic(dir / report_filename(e.name, e.fingerprint, "csv"), e.csv);
  if (o.format == "csv" && !e.csv.empty()) {
    out << e.csv;
  } else {
    out << body;
  }
  return e.passed ? kExitOk : kExitStatFailure;
}

std::vector<Vector> diagonal_grid(int n, int p) {
  std::vector<Vector> grid;
  for (int i = 0; i <= 8; ++i) grid.push_back(Vector::Constant(p, 0.5 * i / std::sqrt(static_cast<double>(n))));
  return grid;
}

int cmd_experiment(const Options& o, std::ostream& out) {
  const int p = o.p;
  const int n = o.n > 0 ? o.n : (p == 2 ? 12 : p + 10);
  if (p < 1 || p > kMaxEnumerationDim) throw DomainError("--p must lie in [1, 20]");
  if (n < p + 2) throw DomainError("--n must be >= p + 2");
  check_alpha(o.alpha);
  const std::uint64_t reps = o.reps > 0 ? o.reps : 20000;
  const SeedSpec seed{o.seed, 0};
  const SeedSpec sigma_seed = derive_stream(seed, 7000);
  Emitted e;
  e.name = o.name;

  auto base_spec = [&](StatKind kind, ConeKind cone, const std::string& default_sigma) {
    const LabeledSigma s = parse_sigma(o.sigma.empty() ? default_sigma : o.sigma, p, sigma_seed);
    ExperimentSpec spec;
    spec.kind = kind;
    spec.cone = cone;
    spec.n = n;
    spec.p = p;
    spec.sigma = s.sigma.matrix();
    spec.sigma_label = s.label;
    spec.alpha = o.alpha;
    spec.reps = reps;
    spec.seed = seed;
    return spec;
  };
  auto stat_kind = [&](StatKind fallback) { return o.kind.empty() ? fallback : parse_stat_kind(o.kind); };

  if (o.name == "null") {
    ExperimentSpec spec = base_spec(stat_kind(StatKind::UIT), ConeKind::Orthant, "random");
    const auto r = validate_null(spec, default_c_grid(spec.kind, n, p));
    e.fingerprint = spec.fingerprint();
    e.json = r.to_json();
    e.csv = r.to_csv();
    e.passed = r.flagged == 0;
  } else if (o.name == "power") {
    const StatKind k = stat_kind(StatKind::UIT);
    const ConeKind c = o.cone.empty() ? default_cone(k) : parse_cone_kind(o.cone);
    check_kind_cone(k, c);
    ExperimentSpec spec = base_spec(k, c, "identity");
    spec.theta_grid = diagonal_grid(n, p);
    if (o.critmethod == "bayes") {
      spec.crit = CritMethod::BayesWeighted;
      spec.prior = o.prior.empty() ? default_prior(p) : parse_prior(o.prior, p);
    } else if (o.critmethod != "max") {
      throw DomainError("--critmethod must be max or bayes");
    }
    const auto r = power_curve(spec);
    e.fingerprint = spec.fingerprint();
    e.json = r.to_json();
    e.csv = r.to_csv();
  } else if (o.name == "domination") {
    if (p < 2) throw DomainError("domination: need --p >= 2");
    ExperimentSpec a = base_spec(stat_kind(StatKind::UIT), ConeKind::Orthant, "identity");
    a.theta_grid = half_plane_grid(n, p);
    ExperimentSpec b = a;
    b.cone = ConeKind::HalfSpace;
    const auto r = domination_report(a, b);
    e.json = r.to_json();
    e.fingerprint = e.json["spec_sha256"].get<std::string>();
    e.csv = r.to_csv();
    e.passed = r.passed();
  } else if (o.name == "similarity") {
    std::vector<LabeledSigma> sigmas;
    for (int i = 0; i < 10; ++i) {
      const SeedSpec s = derive_stream(sigma_seed, i);
      sigmas.push_back({"random:" + std::to_string(s.master_seed) + "/" + std::to_string(s.stream_id), random_sigma(p, s)});
    }
    std::vector<Vector> thetas;
    const double r0 = 1.0 / std::sqrt(static_cast<double>(n));
    for (double t : {0.5, 1.0, 2.0}) thetas.push_back(Vector::Constant(p, t * r0));
    for (double t : {1.0, 2.0}) {
      Vector v = Vector::Zero(p);
      v(0) = t * r0;
      thetas.push_back(v);
    }
    const auto r = similarity_and_bias(n, p, sigmas, thetas, o.alpha, reps, seed);
    e.json = r.to_json();
    e.fingerprint = e.json["spec_sha256"].get<std::string>();
    e.csv = r.to_csv();
    e.passed = r.similarity_passed();
  } else if (o.name == "geometry") {
    GeometryKind g = GeometryKind::UitOrthant;
    if (!o.kind.empty()) {
      if (o.kind == "uit") {
        g = (o.cone == "halfspace") ? GeometryKind::UitHalfSpace : GeometryKind::UitOrthant;
      } else {
        g = parse_geometry_kind(o.kind);
      }
    } else if (o.cone == "halfspace") {
      g = GeometryKind::UitHalfSpace;
    }
    const auto r = geometry_probe(g, n, p, o.trials, o.alpha, seed);
    e.json = r.to_json();
    e.fingerprint = e.json["spec_sha256"].get<std::string>();
    e.passed = r.passed();
  } else if (o.name == "sup") {
    const auto r = sup_approach(stat_kind(StatKind::UIT), p, n, o.alpha, o.K, reps, seed);
    e.json = r.to_json();
    e.fingerprint = e.json["spec_sha256"].get<std::string>();
    e.csv = r.to_csv();
    e.passed = r.passed();
  } else if (o.name == "fuit") {
    const LabeledSigma s = parse_sigma(o.sigma.empty() ? "identity" : o.sigma, p, sigma_seed);
    const auto r = fuit_size(n, p, s, o.alpha, reps, seed);
    e.json = r.to_json();
    e.fingerprint = e.json["spec_sha256"].get<std::string>();
    e.passed = r.passed();
  } else if (o.name == "bayes") {
    const PriorSpec prior = o.prior.empty() ? default_prior(p) : parse_prior(o.prior, p);
    const auto* iw = std::get_if<InvWishartPrior>(&prior);
    if (!iw) throw DomainError("bayes: the compound-null experiment needs an inverted Wishart prior");
    const StatKind k = stat_kind(StatKind::UIT);
    const BayesWeights w = bayes_weights(prior, n, p, std::nullopt, std::max<std::uint64_t>(reps, 10000), derive_stream(seed, 1));
    const auto r = compound_null(k, *iw, n, p, o.alpha, w, reps, derive_stream(seed, 2));
    e.json = r.to_json();
    e.fingerprint = e.json["spec_sha256"].get<std::string>();
    e.passed = r.passed();
  } else {
    throw DomainError("unknown experiment '" + o.name +
                      "' (expected null, power, domination, similarity, geometry, sup, fuit or bayes)");
  }
  e.json["seed"] = o.seed;
  return write_experiment(o, e, out);
}

}  // namespace

// ---------------------------------------------------------------------------

Matrix read_csv_matrix(std::istream& in, const std::string& source) {
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  std::size_t width = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split(line, ',');
    std::vector<double> values(cells.size());
    int bad = -1;
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (!parse_number(cells[j], values[j])) {
        bad = static_cast<int>(j);
        break;
      }
    }
    if (first_content) {
      first_content = false;
      width = cells.size();
      if (bad >= 0) continue;  // header row
    }
    if (cells.size() != width) {
      throw DomainError(source + ": line " + std::to_string(lineno) + ": expected " + std::to_string(width) +
                        " columns, found " + std::to_string(cells.size()));
    }
    if (bad >= 0) {
      throw DomainError(source + ": line " + std::to_string(lineno) + ", column " + std::to_string(bad + 1) +
                        ": non-numeric cell '" + cells[bad] + "'");
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw DomainError(source + ": no data rows");
  Matrix m(rows.size(), width);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < width; ++j) m(i, j) = rows[i][j];
  return m;
}

LabeledSigma parse_sigma(const std::string& text, int p, const SeedSpec& seed) {
  if (text == "identity") return {"identity", SymPD::identity(p)};
  if (text == "mmatrix") return {"mmatrix", m_matrix_inverse_sigma(p)};
  if (text == "random") return {"random:" + std::to_string(seed.master_seed) + "/" + std::to_string(seed.stream_id), random_sigma(p, seed)};
  auto tail_number = [&](const std::string& prefix) {
    double v = 0.0;
    if (!parse_number(text.substr(prefix.size()), v)) throw DomainError("--sigma: bad number in '" + text + "'");
    return v;
  };
  if (text.rfind("random:", 0) == 0) {
    const double v = tail_number("random:");
    if (v < 0 || v != std::floor(v)) throw DomainError("--sigma: random:<seed> needs a nonnegative integer");
    return {text, random_sigma(p, SeedSpec{static_cast<std::uint64_t>(v), 0})};
  }
  if (text.rfind("rho=", 0) == 0) {
    const double rho = tail_number("rho=");
    if (!(rho > -1.0 / std::max(1, p - 1) && rho < 1.0)) throw DomainError("--sigma: rho outside the positive-definite range");
    Matrix m = Matrix::Constant(p, p, rho);
    m.diagonal().setOnes();
    return {text, SymPD(m)};
  }
  if (text.rfind("concentrating:", 0) == 0) {
    const double k = tail_number("concentrating:");
    if (k < 0 || k != std::floor(k) || k > 12) throw DomainError("--sigma: concentrating:<k> needs an integer in [0, 12]");
    return {text, concentrating_sigma(p, static_cast<int>(k))};
  }
  throw DomainError("--sigma: unknown covariance '" + text +
                    "' (expected identity, random, random:<seed>, rho=<r>, concentrating:<k> or mmatrix)");
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tests of a multivariate normal mean against cone alternatives", "conetest"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--alpha", o.alpha, "Significance level");
    sub->add_option("--critmethod", o.critmethod, "Critical values: max or bayes");
    sub->add_option("--prior", o.prior, "Prior for bayes weights: invwishart:m=<int> or haar");
    sub->add_option("--reps", o.reps, "Monte Carlo replicates");
    sub->add_option("--seed", o.seed, "Master seed (generated and recorded when absent)");
    sub->add_option("--out", o.out, "Output file (test, tables) or directory (experiment)");
    sub->add_option("--format", o.format, "json or csv");
    sub->add_option("--kind", o.kind, "t2, lrt, uit or fuit");
    sub->add_option("--cone", o.cone, "global, orthant or halfspace");
  };

  auto* test = app.add_subcommand("test", "Run one test on a CSV dataset");
  common(test);
  test->add_option("--input", o.input, "CSV file of n rows by p columns, or - for stdin");

  auto* tables = app.add_subcommand("tables", "Weight and critical-value tables");
  common(tables);
  tables->add_option("--table", o.table, "weights or critvals");
  tables->add_option("--p", o.p, "Dimension");
  tables->add_option("--n", o.n, "Sample size");
  tables->add_option("--sigma", o.sigma, "Covariance for the weight table");
  tables->add_option("--alphas", o.alphas, "Comma-separated alpha list for critvals");

  auto* exp = app.add_subcommand("experiment", "Monte Carlo experiments");
  common(exp);
  exp->add_option("name", o.name, "null, power, domination, similarity, geometry, sup, fuit or bayes")->required();
  exp->add_option("--p", o.p, "Dimension");
  exp->add_option("--n", o.n, "Sample size");
  exp->add_option("--sigma", o.sigma, "Covariance");
  exp->add_option("--trials", o.trials, "Geometry probe trials");
  exp->add_option("--K", o.K, "Length of the concentrating sequence");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    auto* opt = app.get_subcommands().front()->get_option("--seed");
    o.seed_given = opt->count() > 0;
    if (!o.seed_given) o.seed = fresh_seed();
    if (o.format != "json" && o.format != "csv") throw DomainError("--format must be json or csv");
    if (test->parsed()) return cmd_test(o, out);
    if (tables->parsed()) return cmd_tables(o, out);
    return cmd_experiment(o, out);
  } catch (const DomainError& e) {
    err << "conetest: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConditioningError& e) {
    err << "conetest: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "conetest: internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace conetest
