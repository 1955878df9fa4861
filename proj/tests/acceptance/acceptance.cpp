// Acceptance suite: one PASS/FAIL line per criterion, detail lines indented.
// Exit status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "conetest/cli.hpp"
#include "conetest/errors.hpp"
#include "conetest/mcengine.hpp"
#include "conetest/parallel.hpp"

using namespace conetest;

namespace {

constexpr std::uint64_t kSeed = 1729;
const SeedSpec kRoot{kSeed, 0};

SeedSpec stream(std::uint64_t criterion, std::uint64_t child = 0) {
  return derive_stream(derive_stream(kRoot, criterion), child);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void detail(const std::string& s) { std::cout << "    " << s << "\n"; }

struct Verdict {
  bool pass = true;
  std::string summary;
};

int failures = 0;

void criterion(int id, const std::string& title, const std::function<Verdict()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  if (!v.pass) ++failures;
  std::cout << "AC" << id << (id < 10 ? "  " : " ") << (v.pass ? "PASS" : "FAIL") << "  " << title << ": " << v.summary
            << " [" << fmt("%.1f", seconds_since(t0)) << " s]" << std::endl;
}

Matrix random_spd(int p, Engine& eng) {
  std::normal_distribution<double> z;
  Matrix a(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) a(i, j) = z(eng);
  Matrix m = a * a.transpose() / p + 0.1 * Matrix::Identity(p, p);
  return 0.5 * (m + m.transpose());
}

SampleStats random_instance(Engine& eng, int p, int n) {
  std::normal_distribution<double> z;
  Vector theta(p);
  for (int j = 0; j < p; ++j) theta(j) = 0.5 * z(eng);
  return sample_dataset(n, theta, SymPD(random_spd(p, eng)), eng);
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

// ---------------------------------------------------------------------------

Verdict ac1() {
  int flagged = 0, points = 0;
  double worst_time = 0.0;
  for (auto [p, n] : {std::pair{2, 12}, std::pair{3, 20}}) {
    const auto t0 = std::chrono::steady_clock::now();
    int cfg_flagged = 0;
    for (int s = 0; s < 5; ++s) {
      const SeedSpec sigma_seed = stream(1, 100 * p + s);
      const SymPD sigma = random_sigma(p, sigma_seed);
      for (auto kind : {StatKind::LRT, StatKind::UIT}) {
        ExperimentSpec spec;
        spec.kind = kind;
        spec.cone = ConeKind::Orthant;
        spec.n = n;
        spec.p = p;
        spec.sigma = sigma.matrix();
        spec.sigma_label = "random";
        spec.reps = 100000;
        spec.seed = stream(1, 1000 + 10 * (100 * p + s) + static_cast<int>(kind));
        const auto r = validate_null(spec, default_c_grid(kind, n, p));
        cfg_flagged += r.flagged;
        points += static_cast<int>(r.rows.size());
        if (r.flagged) {
          for (const auto& row : r.rows)
            if (row.flagged)
              detail("flagged p=" + std::to_string(p) + " sigma#" + std::to_string(s) + " " + to_string(kind) +
                     " c=" + fmt("%.4f", row.c) + " empirical=" + fmt("%.5f", row.empirical) +
                     " mixture=" + fmt("%.5f", row.mixture) + " se=" + fmt("%.5f", row.se));
        }
      }
    }
    const double t = seconds_since(t0);
    worst_time = std::max(worst_time, t);
    detail("(p,n)=(" + std::to_string(p) + "," + std::to_string(n) + "): " + std::to_string(cfg_flagged) +
           " flagged, " + fmt("%.1f", t) + " s");
    flagged += cfg_flagged;
  }
  return {flagged == 0 && worst_time < 120.0, std::to_string(flagged) + " of " + std::to_string(points) +
                                                  " tail points outside 3 SE; slowest configuration " +
                                                  fmt("%.1f", worst_time) + " s (target < 120 s)"};
}

Verdict ac2() {
  const auto t0 = std::chrono::steady_clock::now();
  Engine eng = make_engine(stream(2));
  double worst_point = 0.0, worst_value = 0.0, worst_stat = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int p = 1 + i % 6;
    const SampleStats s = random_instance(eng, p, p + 8);
    for (const Cone& cone : {Cone::orthant(p), Cone::half_space(p)}) {
      const ProjectionResult a = project_stats(s, cone, ProjectionAlgorithm::ActiveSet);
      const ProjectionResult e = project_stats(s, cone, ProjectionAlgorithm::FaceEnumeration);
      worst_point = std::max(worst_point, (a.point - e.point).norm() / std::max(1.0, e.point.norm()));
      worst_value = std::max(worst_value, rel(a.sq_norm, e.sq_norm));
      worst_stat = std::max(worst_stat, rel(uit(s, cone).value, uit_by_projection(s, cone, ProjectionAlgorithm::FaceEnumeration)));
      worst_stat = std::max(worst_stat, rel(lrt(s, cone).value, lrt_by_projection(s, cone, ProjectionAlgorithm::FaceEnumeration)));
      worst_stat = std::max(worst_stat, rel(uit(s, cone).value, uit_by_projection(s, cone, ProjectionAlgorithm::ActiveSet)));
    }
  }
  const double t = seconds_since(t0);
  const bool ok = worst_point <= 1e-9 && worst_value <= 1e-9 && worst_stat <= 1e-9 && t < 30.0;
  return {ok, "1000 instances, p <= 6: max point gap " + fmt("%.2e", worst_point) + ", value gap " +
                  fmt("%.2e", worst_value) + ", face vs projection statistic gap " + fmt("%.2e", worst_stat) +
                  " (tol 1e-9)"};
}

std::vector<DominationReport> domination_runs;

Verdict ac3() {
  domination_runs.clear();
  std::uint64_t checks = 0, violations = 0;
  for (auto kind : {StatKind::LRT, StatKind::UIT}) {
    ExperimentSpec a;
    a.kind = kind;
    a.cone = ConeKind::Orthant;
    a.n = 12;
    a.p = 2;
    a.sigma = Matrix::Identity(2, 2);
    a.reps = 100000;
    a.seed = stream(3, static_cast<int>(kind));
    a.theta_grid = half_plane_grid(a.n, a.p, 20);
    ExperimentSpec b = a;
    b.cone = ConeKind::HalfSpace;
    domination_runs.push_back(domination_report(a, b));
    const auto& r = domination_runs.back();
    detail(to_string(kind) + ": " + std::to_string(r.pathwise_violations) + " violations in " +
           std::to_string(r.pathwise_checks) + " replicate-by-theta checks");
    checks += r.pathwise_checks;
    violations += r.pathwise_violations;
  }
  return {violations == 0, std::to_string(checks - violations) + " of " + std::to_string(checks) +
                               " checks satisfy half-space statistic >= orthant statistic (10^5 replicates x 20 grid points, LRT and UIT)"};
}

Verdict ac4(double ac3_seconds) {
  bool ok = !domination_runs.empty();
  std::string s;
  for (const auto& r : domination_runs) {
    const std::string k = to_string(r.spec_orthant.kind);
    detail(k + ": c_orthant=" + fmt("%.12g", r.c_orthant) + " c_halfspace=" + fmt("%.12g", r.c_half) + ", " +
           std::to_string(r.violations) + " grid violations, " + std::to_string(r.strict_points) + " strict points");
    ok = ok && r.same_critical && r.violations == 0 && r.strict_points >= 1;
    s += k + " " + std::to_string(r.strict_points) + " strict/" + std::to_string(r.violations) + " violations; ";
  }
  ok = ok && ac3_seconds < 300.0;
  return {ok, s + "shared critical values, 20-point grid, runtime " + fmt("%.1f", ac3_seconds) + " s (target < 300 s)"};
}

Verdict ac5() {
  const int n = 12, p = 2;
  std::vector<LabeledSigma> sigmas;
  for (int i = 0; i < 10; ++i) sigmas.push_back({"random#" + std::to_string(i), random_sigma(p, stream(5, i))});
  const auto r = similarity_and_bias(n, p, sigmas, {}, 0.05, 100000, stream(5, 100));
  int within = 0;
  for (const auto& row : r.similarity) {
    within += row.within;
    if (!row.within)
      detail("outside: " + row.sigma_label + " " + to_string(row.kind) + " rate=" + fmt("%.5f", row.rate));
  }
  return {r.similarity_passed(), std::to_string(within) + " of " + std::to_string(r.similarity.size()) +
                                     " half-space null rates within 3 SE of 0.05; max deviation " +
                                     fmt("%.2f", r.max_dev_se) + " SE"};
}

Verdict ac6() {
  const auto r = sup_approach(StatKind::UIT, 2, 12, 0.05, 5, 100000, stream(6));
  std::string rates;
  for (const auto& row : r.rows) rates += (rates.empty() ? "" : ", ") + fmt("%.4f", row.rate);
  detail("rho_k = 1 - 10^-k, k = 0..4; rates " + rates);
  return {r.passed(), std::string("nondecreasing ") + (r.nondecreasing ? "yes" : "no") + ", final rate " +
                          fmt("%.4f", r.rows.back().rate) + (r.ends_near_alpha ? " within" : " outside") +
                          " 3 SE of 0.05, k=0 rate " + fmt("%.4f", r.rows.front().rate)};
}

Verdict ac7() {
  bool ok = true;
  double worst = 0.0;
  for (int p : {2, 3, 4}) {
    const MixtureWeights w = mixture_weights(SymPD::identity(p), 100000, stream(7, p));
    for (int k = 0; k <= p; ++k) {
      const double expected = std::tgamma(p + 1.0) / (std::tgamma(k + 1.0) * std::tgamma(p - k + 1.0)) / std::pow(2.0, p);
      const double z = std::abs(w.w[k] - expected) / w.se[k];
      worst = std::max(worst, z);
      ok = ok && z <= 4.0;
    }
  }
  Matrix s(2, 2);
  s << 1, 0.5, 0.5, 1;
  const MixtureWeights w = mixture_weights(SymPD(s), 100000, stream(7, 10));
  const double pi = std::acos(-1.0);
  const double expect[3] = {0.25 - std::asin(0.5) / (2 * pi), 0.5, 0.25 + std::asin(0.5) / (2 * pi)};
  for (int k = 0; k <= 2; ++k) {
    const double z = std::abs(w.w[k] - expect[k]) / w.se[k];
    worst = std::max(worst, z);
    ok = ok && z <= 4.0;
  }
  detail("rho=0.5 weights " + fmt("%.4f", w.w[0]) + ", " + fmt("%.4f", w.w[1]) + ", " + fmt("%.4f", w.w[2]) +
         " vs 1/6, 1/2, 1/3");
  return {ok, "identity p=2,3,4 and rho=0.5: max deviation " + fmt("%.2f", worst) + " SE (limit 4)"};
}

Verdict ac8() {
  Engine eng = make_engine(stream(8));
  double worst_lr = 0.0, worst_dir = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int p = 1 + i % 5;
    const SampleStats s = random_instance(eng, p, p + 6 + i % 7);
    for (const Cone& cone : {Cone::orthant(p), Cone::half_space(p)}) {
      const double l = lrt(s, cone).value;
      const double log_identity = 0.5 * (s.n() - 1) * std::log1p(l);
      const double log_direct = log_integrated_lr_direct(s, cone);
      worst_lr = std::max(worst_lr, std::abs(std::expm1(log_direct - log_identity)));
      const StatisticResult u = uit(s, cone);
      if (!u.face.is_empty()) {
        const double d = directional_t2(s, u.face, optimal_direction(s, u.face));
        worst_dir = std::max(worst_dir, rel(d, u.value));
      }
    }
  }
  return {worst_lr <= 1e-8 && worst_dir <= 1e-9,
          "1000 instances: max relative gap of the integrated LR to (1+L)^((n-1)/2) " + fmt("%.2e", worst_lr) +
              " (tol 1e-8); directional statistic vs U " + fmt("%.2e", worst_dir)};
}

Verdict ac9() {
  const int n = 12, p = 2;
  const InvWishartPrior prior{SymPD::identity(p), p + 2};
  const BayesWeights w = bayes_weights(prior, n, p, std::nullopt, 100000, stream(9, 1));
  const auto r = compound_null(StatKind::UIT, prior, n, p, 0.05, w, 100000, stream(9, 2));
  detail("weights b = " + fmt("%.4f", w.b[0]) + ", " + fmt("%.4f", w.b[1]) + ", " + fmt("%.4f", w.b[2]) +
         "; critical " + fmt("%.6f", r.critical));
  BayesWeights two;
  two.n = n;
  two.p = p;
  two.b = max_principle_weights(p);
  double worst = 0.0;
  for (auto kind : {StatKind::LRT, StatKind::UIT})
    for (double alpha : {0.1, 0.05, 0.01})
      worst = std::max(worst, std::abs(critval_bayes(kind, alpha, two) - critval_max(kind, ConeKind::Orthant, alpha, n, p)));
  return {r.passed() && worst <= 1e-9, "compound-null rejection " + fmt("%.5f", r.rate) + " vs 0.05 (3 SE = " +
                                           fmt("%.5f", 3 * r.se) + "); two-point weights reproduce critval_max to " +
                                           fmt("%.1e", worst)};
}

Verdict ac10() {
  bool ok = true;
  std::string s;
  for (auto kind : {GeometryKind::UitOrthant, GeometryKind::UitHalfSpace}) {
    const auto r = geometry_probe(kind, 12, 2, 10000, 0.05, stream(10, static_cast<int>(kind)));
    detail(to_string(kind) + ": " + std::to_string(r.convexity_violations) + " joint-space midpoint violations in " +
           std::to_string(r.trials) + " (x-bar only: " + std::to_string(r.fixed_s_violations) + "), worst ratio " +
           fmt("%.4f", r.worst_midpoint_ratio) + "; dual points zero " + std::to_string(r.dual_zero_statistic) + "/" +
           std::to_string(r.dual_points) + ", accepted " + std::to_string(r.dual_accepted) + "; T2 contrast " +
           (r.contrast_found ? "found at scale " + fmt("%.3g", r.contrast_scale) : std::string("not found")));
    if (r.example) {
      detail("  violation: U(end1)=" + fmt("%.5f", r.example->stat1) + " U(end2)=" + fmt("%.5f", r.example->stat2) +
             " U(midpoint)=" + fmt("%.5f", r.example->stat_mid) + " c=" + fmt("%.5f", r.critical));
    }
    ok = ok && r.passed();
    s += to_string(kind) + " " + std::to_string(r.convexity_violations) + " violations; ";
  }
  return {ok, s + "dual-cone and T2 contrast checks as detailed"};
}

Verdict ac11() {
  bool ok = true;
  std::string s;
  for (int p : {2, 5}) {
    for (const std::string name : {"identity", "mmatrix"}) {
      const LabeledSigma sigma{name, name == "identity" ? SymPD::identity(p) : m_matrix_inverse_sigma(p)};
      const auto r = fuit_size(p + 10, p, sigma, 0.05, 100000, stream(11, 10 * p + (name == "identity" ? 0 : 1)));
      ok = ok && r.passed();
      s += "p=" + std::to_string(p) + " " + name + " " + fmt("%.4f", r.rate) + "; ";
    }
  }
  return {ok, "null sizes " + s + "bound 0.05 + 3 SE = " + fmt("%.4f", 0.05 + 3 * std::sqrt(0.05 * 0.95 / 1e5))};
}

Verdict ac12() {
  auto reports = [](int workers) {
    std::vector<std::string> out;
    ExperimentSpec spec;
    spec.n = 12;
    spec.p = 2;
    spec.sigma = random_sigma(2, stream(12, 1)).matrix();
    spec.reps = 9000;  // several blocks
    spec.seed = stream(12, 2);
    out.push_back(validate_null(spec, default_c_grid(StatKind::UIT, 12, 2), 20000, workers).to_json().dump());
    spec.theta_grid = {Vector::Zero(2), Vector::Constant(2, 0.5)};
    out.push_back(power_curve(spec, workers).to_json().dump());
    ExperimentSpec a = spec;
    a.theta_grid = half_plane_grid(12, 2, 5);
    ExperimentSpec b = a;
    b.cone = ConeKind::HalfSpace;
    out.push_back(domination_report(a, b, workers).to_json().dump());
    out.push_back(similarity_and_bias(12, 2, {{"identity", SymPD::identity(2)}}, {Vector::Constant(2, 0.3)}, 0.05, 5000,
                                      stream(12, 3), workers)
                      .to_json()
                      .dump());
    out.push_back(geometry_probe(GeometryKind::UitOrthant, 12, 2, 3000, 0.05, stream(12, 4), workers).to_json().dump());
    out.push_back(sup_approach(StatKind::LRT, 2, 12, 0.05, 3, 5000, stream(12, 5), workers).to_json().dump());
    out.push_back(fuit_size(12, 2, {"identity", SymPD::identity(2)}, 0.05, 5000, stream(12, 6), workers).to_json().dump());
    const InvWishartPrior prior{SymPD::identity(2), 4};
    const BayesWeights w = bayes_weights(prior, 12, 2, std::nullopt, 10000, stream(12, 7), workers);
    out.push_back(compound_null(StatKind::UIT, prior, 12, 2, 0.05, w, 5000, stream(12, 8), workers).to_json().dump());
    return out;
  };
  const auto one = reports(1);
  const auto four = reports(4);
  int same = 0;
  for (std::size_t i = 0; i < one.size(); ++i) same += one[i] == four[i];

  // End to end through the CLI with the worker cap taken from the environment.
  namespace fs = std::filesystem;
  auto cli_bytes = [](const char* threads) {
    ::setenv("CONETEST_THREADS", threads, 1);
    const fs::path dir = fs::temp_directory_path() / ("conetest-ac12-" + std::string(threads));
    fs::remove_all(dir);
    const std::string out = dir.string();
    const char* argv[] = {"conetest", "experiment", "similarity", "--reps", "4000", "--seed", "99", "--out", out.c_str()};
    std::ostringstream o, e;
    run_cli(9, argv, o, e);
    std::string all;
    for (const auto& f : fs::directory_iterator(dir)) {
      std::ifstream in(f.path(), std::ios::binary);
      all += f.path().filename().string() + ":" + std::string(std::istreambuf_iterator<char>(in), {});
    }
    fs::remove_all(dir);
    return all;
  };
  const bool cli_same = cli_bytes("1") == cli_bytes("3");
  ::unsetenv("CONETEST_THREADS");
  const int total = static_cast<int>(one.size());
  return {same == total && cli_same, std::to_string(same) + " of " + std::to_string(total) +
                                         " experiment reports byte-identical for 1 vs 4 workers; CLI report files " +
                                         (cli_same ? "identical" : "differ") + " for CONETEST_THREADS=1 vs 3"};
}

}  // namespace

int main() {
  std::cout << "acceptance suite, seed " << kSeed << ", " << default_workers() << " worker(s)\n";
  criterion(1, "null-mixture validation", ac1);
  criterion(2, "projection oracle equivalence", ac2);
  const auto t3 = std::chrono::steady_clock::now();
  criterion(3, "pathwise dominance", ac3);
  const double ac3_seconds = seconds_since(t3);
  criterion(4, "shared critical value and power domination", [&] { return ac4(ac3_seconds); });
  criterion(5, "half-space similarity", ac5);
  criterion(6, "sup-approach", ac6);
  criterion(7, "weight sanity", ac7);
  criterion(8, "integrated-LR identity", ac8);
  criterion(9, "Bayes-weighted calibration", ac9);
  criterion(10, "acceptance-region geometry", ac10);
  criterion(11, "FUIT size", ac11);
  criterion(12, "determinism", ac12);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criterion(s) failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
