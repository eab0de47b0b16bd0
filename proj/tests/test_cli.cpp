#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"

#include "itoanova/cli.hpp"

namespace fs = std::filesystem;
using namespace itoanova;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("itoanova_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "itoanova");
    return cli::run(args);
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream o;
    o << in.rdbuf();
    return o.str();
  }
  static long lines(const fs::path& p) {
    const auto s = slurp(p);
    return std::count(s.begin(), s.end(), '\n');
  }
  void write(const std::string& name, const std::string& text) { std::ofstream(dir_ / name) << text; }

  std::string exact_regression_file() {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 0.05);
    std::ostringstream o;
    o.precision(17);
    o << "time,S,Xi\n";
    double s = 5.0;
    for (int i = 0; i <= 512; ++i) {
      if (i > 0) s += n(rng);
      o << i / 512.0 << ',' << s << ',' << 2 * s << '\n';
    }
    write("exact.csv", o.str());
    return path("exact.csv");
  }

  fs::path dir_;
};

const char* kModel = R"({"model":"ConstantRho","rho":1,"sigma_S":1,"sigma_Z":1})";

}  // namespace

TEST_F(Cli, SimulateRowsAndDeterminism) {
  ASSERT_EQ(run({"--seed", "4", "-o", path("a"), "simulate", "--model-json", kModel, "--n", "256"}), cli::Ok);
  ASSERT_EQ(run({"--seed", "4", "-o", path("b"), "simulate", "--model-json", kModel, "--n", "256"}), cli::Ok);
  EXPECT_EQ(lines(dir_ / "a/observations.csv"), 258);
  EXPECT_EQ(lines(dir_ / "a/observations.csv"), lines(dir_ / "a/truth.csv"));
  for (const char* f : {"observations.csv", "truth.csv", "manifest.json"})
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
}

TEST_F(Cli, UnknownModel) {
  EXPECT_EQ(run({"-o", path("a"), "simulate", "--model-json", R"({"model":"Heston"})"}), cli::Data);
  EXPECT_FALSE(fs::exists(dir_ / "a"));
}

TEST_F(Cli, EstimateExactRegression) {
  const auto in = exact_regression_file();
  ASSERT_EQ(run({"-o", path("out"), "estimate", "--input", in}), cli::Ok);
  const auto j = nlohmann::json::parse(slurp(dir_ / "out/summary.json"));
  EXPECT_NEAR(j["estimate"].get<double>(), 0.0, 1e-10);
  EXPECT_EQ(j["r2"]["value"].get<double>(), 1.0);
  EXPECT_EQ(lines(dir_ / "out/report.csv"), 514);
  EXPECT_EQ(lines(dir_ / "out/rho_hat.csv"), 514);
  const auto m = nlohmann::json::parse(slurp(dir_ / "out/manifest.json"));
  EXPECT_EQ(m["inputs"][0]["sha256"].get<std::string>(), cli::sha256_file(in));
}

TEST_F(Cli, MissingColumn) {
  const auto in = exact_regression_file();
  EXPECT_EQ(run({"-o", path("out"), "estimate", "--input", in, "--xi-col", "Y"}), cli::Data);
  EXPECT_FALSE(fs::exists(dir_ / "out"));
}

TEST_F(Cli, AlphaOutOfRangeWritesNothing) {
  const auto in = exact_regression_file();
  EXPECT_EQ(run({"-o", path("out"), "estimate", "--input", in, "--alpha", "1.5"}), cli::Usage);
  EXPECT_EQ(run({"-o", path("out"), "band", "--input", in, "--alpha", "-0.1"}), cli::Usage);
  EXPECT_FALSE(fs::exists(dir_ / "out"));
}

TEST_F(Cli, AsynchronousInputs) {
  write("s.csv", "time,value\n0,1\n0.1,1.2\n0.2,0.9\n0.3,1.1\n0.4,1.0\n0.5,1.3\n");
  write("x.csv", "time,value\n0,2\n0.15,2.5\n0.3,1.9\n0.5,2.2\n");
  ASSERT_EQ(run({"-o", path("out"), "estimate", "--s-file", path("s.csv"), "--xi-file", path("x.csv"), "--c",
                 "1"}),
            cli::Ok);
  EXPECT_EQ(lines(dir_ / "out/report.csv"), 8);
}

TEST_F(Cli, BandAndGof) {
  ASSERT_EQ(run({"--seed", "2", "-o", path("sim"), "simulate", "--model-json", kModel, "--n", "1024"}), cli::Ok);
  const auto obs = path("sim/observations.csv");
  ASSERT_EQ(run({"-o", path("band"), "band", "-i", obs}), cli::Ok);
  const auto b = nlohmann::json::parse(slurp(dir_ / "band/band.json"));
  EXPECT_NEAR(b["c_tau"].get<double>(), std::sqrt(b["tau_hat"].get<double>()) * b["c_unit"].get<double>(), 1e-12);
  ASSERT_EQ(run({"--seed", "3", "-o", path("gof"), "gof", "-i", obs, "--bootstrap", "19"}), cli::Ok);
  const auto g = nlohmann::json::parse(slurp(dir_ / "gof/gof.json"));
  EXPECT_GE(g["p_value"].get<double>(), 0.0);
  EXPECT_LE(g["p_value"].get<double>(), 1.0);
  EXPECT_EQ(run({"-o", path("gof2"), "gof", "-i", obs, "--family", "linear"}), cli::Usage);
}

TEST_F(Cli, BandOnZeroResidualIsDataError) {
  EXPECT_EQ(run({"-o", path("out"), "band", "-i", exact_regression_file()}), cli::Data);
}

TEST_F(Cli, SmokePlan) {
  ASSERT_EQ(run({"-o", path("mc"), "mc", "--plan", ITOANOVA_SOURCE_DIR "/plans/smoke.json"}), cli::Ok);
  const auto v = nlohmann::json::parse(slurp(dir_ / "mc/verdict.json"));
  EXPECT_TRUE(v["pass"].get<bool>());
  EXPECT_TRUE(fs::exists(dir_ / "mc/errors.csv"));
}

TEST_F(Cli, MalformedPlan) {
  write("bad.json", R"({"model":{"model":"ConstantRho"},"replications":2,"n":[256,"x"]})");
  EXPECT_EQ(run({"-o", path("mc"), "mc", "--plan", path("bad.json")}), cli::Data);
  write("broken.json", "{ not json");
  EXPECT_EQ(run({"-o", path("mc"), "mc", "--plan", path("broken.json")}), cli::Data);
  EXPECT_FALSE(fs::exists(dir_ / "mc"));
}

TEST_F(Cli, FailingCheckExitCode) {
  write("strict.json", R"({"model":{"model":"ConstantRho"},"replications":2,"n":[256],"fine_factor":8,
    "statistics":["errors"],"checks":[{"id":"impossible","kind":"rv_variance","alpha":0.5,"target":100,"tol":0.1}]})");
  EXPECT_EQ(run({"-o", path("mc"), "mc", "--plan", path("strict.json")}), cli::AcceptanceFail);
  EXPECT_TRUE(fs::exists(dir_ / "mc/verdict.json"));
}

TEST_F(Cli, Sha256) {
  write("abc.txt", "abc");
  EXPECT_EQ(cli::sha256_file(dir_ / "abc.txt"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run({}), cli::Usage);
  EXPECT_EQ(run({"estimate"}), cli::Data);
  EXPECT_EQ(run({"frobnicate"}), cli::Usage);
}
