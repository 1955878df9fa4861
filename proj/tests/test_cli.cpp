#include <gtest/gtest.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "conetest/cli.hpp"
#include "conetest/errors.hpp"
#include "support.hpp"

using namespace conetest;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "conetest");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("conetest-cli-" + std::to_string(::getpid()) + "-" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }
  std::string read(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  }
  fs::path dir_;
};

}  // namespace

TEST(CsvReader, HeaderDetectionAndDiagnostics) {
  std::istringstream with_header("x,y\n1,2\n3,4e-1\n");
  const Matrix a = read_csv_matrix(with_header, "a.csv");
  EXPECT_EQ(a.rows(), 2);
  EXPECT_DOUBLE_EQ(a(1, 1), 0.4);
  std::istringstream plain("1,2\n\n3, 0.4\n");
  EXPECT_EQ(read_csv_matrix(plain, "b.csv"), a);
  std::istringstream bad("1,2\n3,4\n5,abc\n");
  try {
    read_csv_matrix(bad, "c.csv");
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3, column 2"), std::string::npos) << e.what();
  }
  std::istringstream ragged("1,2\n3\n");
  EXPECT_THROW(read_csv_matrix(ragged, "d.csv"), DomainError);
  std::istringstream comma_radix("1,2\n\"3,5\",4\n");
  EXPECT_THROW(read_csv_matrix(comma_radix, "e.csv"), DomainError);
  std::istringstream nan_cell("1,2\nnan,4\n");
  EXPECT_THROW(read_csv_matrix(nan_cell, "f.csv"), DomainError);
}

TEST_F(CliTest, ZeroMeanDatasetAccepts) {
  const std::string f = write("zero.csv", "a,b\n1,2\n-1,-2\n0.5,0.1\n-0.5,-0.1\n2,-1\n-2,1\n");
  for (const std::string kind : {"uit", "lrt", "t2"}) {
    const CliRun r = run({"test", "--input", f, "--kind", kind});
    ASSERT_EQ(r.code, 0) << r.err;
    const Json j = Json::parse(r.out);
    EXPECT_EQ(j["value"].get<double>(), 0.0);
    EXPECT_EQ(j["p_value"].get<double>(), 1.0);
    EXPECT_EQ(j["decision"], "accept");
    EXPECT_EQ(j["schema"], 1);
  }
}

TEST_F(CliTest, RoundTripMatchesLibrary) {
  std::mt19937_64 rng(40);
  std::ostringstream csv;
  csv.precision(17);
  for (int i = 0; i < 9; ++i) {
    const Vector v = conetest::support::random_vector(3, rng);
    csv << v(0) + 0.3 << "," << v(1) << "," << v(2) - 0.2 << "\n";
  }
  const std::string f = write("d.csv", csv.str());
  const CliRun r = run({"test", "--input", f, "--kind", "lrt", "--cone", "halfspace"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  std::ifstream in(f);
  const SampleStats s = summarize(read_csv_matrix(in, f));
  const double value = lrt(s, Cone::half_space(3)).value;
  EXPECT_EQ(j["value"].get<double>(), value);
  EXPECT_EQ(j["critical"].get<double>(), critval_max(StatKind::LRT, ConeKind::HalfSpace, 0.05, 9, 3));
  EXPECT_FALSE(j["conservative"].get<bool>());
}

TEST_F(CliTest, DataErrorsExitTwo) {
  const CliRun bad = run({"test", "--input", write("bad.csv", "1,2\n3,x\n4,5\n")});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("line 2"), std::string::npos);
  EXPECT_EQ(run({"test", "--input", write("small.csv", "1,2\n3,4\n5,6\n")}).code, 2);
  EXPECT_EQ(run({"test", "--input", write("ragged.csv", "1,2\n3\n")}).code, 2);
  EXPECT_EQ(run({"test", "--input", (dir_ / "missing.csv").string()}).code, 2);
  EXPECT_EQ(run({"test"}).code, 2);
  EXPECT_EQ(run({"test", "--input", write("ok.csv", "1,2\n3,4\n5,7\n1,1\n"), "--alpha", "1.5"}).code, 2);
  EXPECT_EQ(run({"test", "--input", write("ok2.csv", "1,2\n3,4\n5,7\n1,1\n"), "--kind", "t2", "--cone", "orthant"}).code, 2);
  EXPECT_EQ(run({"bogus"}).code, 2);
  EXPECT_EQ(run({"test", "--alpha", "abc"}).code, 2);
}

TEST_F(CliTest, BayesRecordsSeed) {
  const std::string f = write("d.csv", "1,2\n0.5,-1\n-0.3,0.4\n2,1\n0.1,0.2\n0.7,0.9\n");
  const CliRun a = run({"test", "--input", f, "--critmethod", "bayes", "--reps", "10000", "--seed", "5"});
  ASSERT_EQ(a.code, 0) << a.err;
  const Json j = Json::parse(a.out);
  EXPECT_EQ(j["seed"].get<std::uint64_t>(), 5u);
  EXPECT_EQ(j["prior"], "invwishart:m=4");
  EXPECT_EQ(run({"test", "--input", f, "--critmethod", "bayes", "--reps", "10000", "--seed", "5"}).out, a.out);
  const CliRun unseeded = run({"test", "--input", f, "--critmethod", "bayes", "--reps", "10000"});
  ASSERT_EQ(unseeded.code, 0);
  EXPECT_TRUE(Json::parse(unseeded.out).contains("seed"));
}

TEST_F(CliTest, TablesDeterministicAndMonotone) {
  const CliRun w1 = run({"tables", "--p", "2", "--seed", "7", "--reps", "40000", "--out", (dir_ / "w1.csv").string()});
  const CliRun w2 = run({"tables", "--p", "2", "--seed", "7", "--reps", "40000", "--out", (dir_ / "w2.csv").string()});
  ASSERT_EQ(w1.code, 0) << w1.err;
  ASSERT_EQ(w2.code, 0);
  const std::string text = read(dir_ / "w1.csv");
  EXPECT_EQ(text, read(dir_ / "w2.csv"));
  std::istringstream is(text);
  std::string line;
  std::getline(is, line);
  std::getline(is, line);
  EXPECT_EQ(line, "k,w,se,reps");
  const double expected[3] = {0.25, 0.5, 0.25};
  for (int k = 0; k < 3; ++k) {
    std::getline(is, line);
    std::istringstream row(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(row, cell, ',')) v.push_back(std::stod(cell));
    EXPECT_NEAR(v[1], expected[k], 4 * v[2]);
  }

  const CliRun c = run({"tables", "--table", "critvals", "--p", "3", "--n", "20", "--alphas", "0.2,0.1,0.05,0.01"});
  ASSERT_EQ(c.code, 0) << c.err;
  std::istringstream cs(c.out);
  std::getline(cs, line);
  std::getline(cs, line);
  EXPECT_EQ(line, "alpha,lrt,uit");
  double prev_l = 0, prev_u = 0;
  while (std::getline(cs, line)) {
    std::istringstream row(line);
    std::string a, l, u;
    std::getline(row, a, ',');
    std::getline(row, l, ',');
    std::getline(row, u, ',');
    EXPECT_GT(std::stod(l), prev_l);
    EXPECT_GT(std::stod(u), prev_u);
    prev_l = std::stod(l);
    prev_u = std::stod(u);
  }
  EXPECT_EQ(run({"tables", "--table", "critvals", "--alphas", "0.1,2"}).code, 2);
  EXPECT_EQ(run({"tables", "--table", "other"}).code, 2);
  EXPECT_EQ(run({"tables", "--p", "2", "--n", "3"}).code, 2);
}

TEST_F(CliTest, ExperimentsWriteFingerprintedReports) {
  const CliRun r = run({"experiment", "domination", "--p", "2", "--n", "12", "--alpha", "0.05", "--reps", "20000",
                     "--seed", "3", "--out", dir_.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j["pathwise_violations"].get<std::uint64_t>(), 0u);
  EXPECT_EQ(j["seed"].get<std::uint64_t>(), 3u);
  const std::string fp = j["spec_sha256"].get<std::string>().substr(0, 16);
  EXPECT_TRUE(fs::exists(dir_ / ("domination-" + fp + ".json")));
  EXPECT_TRUE(fs::exists(dir_ / ("domination-" + fp + ".csv")));
  EXPECT_EQ(read(dir_ / ("domination-" + fp + ".json")), r.out);

  EXPECT_EQ(run({"experiment", "nonesuch", "--out", dir_.string()}).code, 2);
  EXPECT_EQ(run({"experiment"}).code, 2);
  EXPECT_EQ(run({"experiment", "sup", "--K", "2", "--out", dir_.string()}).code, 2);
}

// The half-space UIT is exact: scripted runs on null data reject at about alpha.
TEST_F(CliTest, HalfSpaceUitRejectsAtNominalRate) {
  std::mt19937_64 rng(41);
  const int runs = 1000;
  int rejections = 0;
  const std::string f = (dir_ / "null.csv").string();
  for (int i = 0; i < runs; ++i) {
    std::ofstream os(f);
    os.precision(17);
    for (int r = 0; r < 12; ++r) {
      const Vector v = conetest::support::random_vector(2, rng);
      os << v(0) << "," << 0.5 * v(0) + v(1) << "\n";
    }
    os.close();
    const CliRun r = run({"test", "--input", f, "--kind", "uit", "--cone", "halfspace", "--alpha", "0.05"});
    ASSERT_EQ(r.code, 0) << r.err;
    rejections += Json::parse(r.out)["decision"] == "reject";
  }
  EXPECT_NEAR(rejections / double(runs), 0.05, 3 * std::sqrt(0.05 * 0.95 / runs));
}
