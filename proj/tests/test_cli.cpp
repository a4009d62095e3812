#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "instances.hpp"
#include "mmlindley/cli.hpp"

using namespace mmlindley;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("mmlindley_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }
  static std::string read(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  }
  cli::Options options(const std::string& config, const std::string& sub = "out") {
    cli::Options o;
    o.config = config;
    o.out_dir = (dir_ / sub).string();
    return o;
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

const char* kScalarModel2 = R"({
  "model": "model2",
  "chain": {"P": [[1]]},
  "service": [{"kind": "exponential", "rate": 10}],
  "interarrival": [{"kind": "exponential", "rate": 2}],
  "alt_service": [{"kind": "exponential", "rate": 5}],
  "alt_interarrival": [{"kind": "exponential", "rate": 3}],
  "v_law": {"p": 0.5}
})";

}  // namespace

TEST_F(CliTest, SolveShippedModel2Config) {
  const cli::Options o = options((mmtest::config_dir() / "sweep_model2.json").string());
  ASSERT_EQ(cli::cmd_solve(o, out_, err_), cli::ok) << err_.str();
  const json r = json::parse(read(fs::path(o.out_dir) / "report.json"));
  ASSERT_FALSE(r["checks"].empty());
  EXPECT_EQ(r["checks"][0]["name"], "phi(0) = pi");
  for (const auto& c : r["checks"]) EXPECT_TRUE(c["pass"].get<bool>()) << c.dump();
  EXPECT_TRUE(fs::exists(fs::path(o.out_dir) / "report.txt"));
  EXPECT_NEAR(r["outputs"]["pi"][0].get<double>(), 3.0 / 7.0, 1e-12);
}

TEST_F(CliTest, SolveEveryShippedConfig) {
  for (const auto& entry : fs::directory_iterator(mmtest::config_dir())) {
    std::ostringstream out, err;
    EXPECT_EQ(cli::cmd_solve(options(entry.path().string(), entry.path().stem().string()), out, err), cli::ok)
        << entry.path() << ": " << err.str();
  }
}

TEST_F(CliTest, NoNegativeMultiplierIsUnstable) {
  const std::string cfg = write("p3zero.json", R"({
    "model": "model1",
    "chain": {"P": [[1]]},
    "service": [{"kind": "exponential", "rate": 10}],
    "interarrival": [{"kind": "exponential", "rate": 2}],
    "v_law": {"p1": 0.5, "p2": 0.5, "p3": 0, "a": 0.5, "atoms": [{"value": -1, "weight": 1}]}
  })");
  EXPECT_EQ(cli::cmd_solve(options(cfg), out_, err_), cli::unstable);
}

TEST_F(CliTest, MalformedConfigNamesThePath) {
  const std::string cfg = write("bad.json", R"({
    "model": "model2",
    "chain": {"P": [[0.5, 0.5], [0.5, 0.5]]},
    "service": [{"kind": "exponential", "rate": 10}, {"kind": "exponential", "rate": -8}],
    "interarrival": [{"kind": "exponential", "rate": 2}, {"kind": "exponential", "rate": 3}],
    "alt_service": [{"kind": "exponential", "rate": 5}, {"kind": "exponential", "rate": 4}],
    "alt_interarrival": [{"kind": "exponential", "rate": 3}, {"kind": "exponential", "rate": 3}],
    "v_law": {"p": 0.5}
  })");
  EXPECT_EQ(cli::cmd_solve(options(cfg), out_, err_), cli::config_error);
  EXPECT_NE(err_.str().find("service[1].rate"), std::string::npos) << err_.str();
}

TEST_F(CliTest, ConfigErrors) {
  auto code = [&](const std::string& text) {
    std::ostringstream out, err;
    return cli::cmd_solve(options(write("c.json", text)), out, err);
  };
  EXPECT_EQ(code("{ not json"), cli::config_error);
  EXPECT_EQ(code(R"({"model": "model3"})"), cli::config_error);
  EXPECT_EQ(code(R"({"model": "model2", "chain": {"P": [[0.5, 0.4], [0.5, 0.5]]}})"), cli::config_error);
  EXPECT_EQ(cli::cmd_solve(options((dir_ / "missing.json").string()), out_, err_), cli::config_error);
}

TEST_F(CliTest, CompareWellConditionedModel2) {
  cli::Options o = options(write("m2.json", kScalarModel2));
  o.n_steps = 400000;
  o.replications = 8;
  o.seed = 101;
  ASSERT_EQ(cli::cmd_compare(o, out_, err_), cli::ok) << out_.str() << err_.str();
  const std::string csv = read(fs::path(o.out_dir) / "compare.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "quantity,state,analytic,simulated,stderr,z_score,pass");
  EXPECT_EQ(csv.find("false"), std::string::npos);
}

TEST_F(CliTest, CorruptedCoefficientsFailTheMeanRows) {
  cli::Options o = options((mmtest::config_dir() / "model1_a.json").string());
  o.n_steps = 300000;
  o.replications = 8;
  o.corrupt_c = true;
  EXPECT_EQ(cli::cmd_compare(o, out_, err_), cli::comparison_failure);
  std::istringstream csv(read(fs::path(o.out_dir) / "compare.csv"));
  std::string line;
  int failed_means = 0;
  while (std::getline(csv, line))
    if (line.rfind("mean,", 0) == 0 && line.find(",false") != std::string::npos) ++failed_means;
  EXPECT_GT(failed_means, 0);
}

TEST_F(CliTest, EmptySimBlockUsesDefaults) {
  std::string text = kScalarModel2;
  text.insert(text.rfind('}'), R"(, "sim": {})");
  cli::Options o = options(write("defaults.json", text));
  EXPECT_EQ(cli::cmd_compare(o, out_, err_), cli::ok) << err_.str();
  EXPECT_TRUE(fs::exists(fs::path(o.out_dir) / "compare.csv"));
}

TEST_F(CliTest, CompareIsByteIdenticalAcrossRuns) {
  cli::Options a = options((mmtest::config_dir() / "model1_c.json").string(), "a");
  a.n_steps = 100000;
  a.replications = 4;
  cli::Options b = a;
  b.out_dir = (dir_ / "b").string();
  cli::cmd_compare(a, out_, err_);
  cli::cmd_compare(b, out_, err_);
  const std::string x = read(fs::path(a.out_dir) / "compare.csv"), y = read(fs::path(b.out_dir) / "compare.csv");
  EXPECT_FALSE(x.empty());
  EXPECT_EQ(x, y);
}

TEST_F(CliTest, SimulateWritesReport) {
  cli::Options o = options(write("m2.json", kScalarModel2));
  o.n_steps = 50000;
  o.replications = 2;
  ASSERT_EQ(cli::cmd_simulate(o, out_, err_), cli::ok) << err_.str();
  const json r = json::parse(read(fs::path(o.out_dir) / "simulate.json"));
  EXPECT_EQ(r["samples_per_replication"].get<int>(), 40000);
}

TEST_F(CliTest, SweepModel1Columns) {
  cli::Options o = options((mmtest::config_dir() / "sweep_model1.json").string());
  o.u_grid = {0.01, 1.0, 2.0};
  ASSERT_EQ(cli::cmd_sweep_model1(o, out_, err_), cli::ok) << err_.str();
  std::istringstream csv(read(fs::path(o.out_dir) / "sweep_model1.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "u,mean_auto,mean_indep");
  std::vector<double> autos, indeps;
  while (std::getline(csv, line)) {
    double u, x, y;
    char c1, c2;
    std::istringstream(line) >> u >> c1 >> x >> c2 >> y;
    autos.push_back(x);
    indeps.push_back(y);
  }
  ASSERT_EQ(autos.size(), 3u);
  EXPECT_LT(autos[0], 1e-3);  // service nearly vanishes
  EXPECT_LT(indeps[0], 1e-3);
  EXPECT_GT(autos[2], autos[1]);
  EXPECT_GT(indeps[2], indeps[1]);
}

TEST_F(CliTest, SweepModel2RejectsBadGrid) {
  cli::Options o = options((mmtest::config_dir() / "sweep_model2.json").string());
  o.p_grid = {0.0, 0.5};
  EXPECT_EQ(cli::cmd_sweep_model2(o, out_, err_), cli::config_error);
  o.p_grid = {0.5};
  o.u_grid = {-1.0};
  EXPECT_EQ(cli::cmd_sweep_model2(o, out_, err_), cli::config_error);
}

TEST_F(CliTest, SweepModel2FullGridSolves) {
  const cli::Options o = options((mmtest::config_dir() / "sweep_model2.json").string());
  EXPECT_EQ(cli::cmd_sweep_model2(o, out_, err_), cli::ok) << err_.str();
  EXPECT_EQ(read(fs::path(o.out_dir) / "sweep_model2.csv").find("nan"), std::string::npos);
}

TEST_F(CliTest, WrongModelForSweep) {
  const cli::Options o = options((mmtest::config_dir() / "sweep_model2.json").string());
  EXPECT_EQ(cli::cmd_sweep_model1(o, out_, err_), cli::config_error);
}
