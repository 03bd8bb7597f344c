#include "uavtl/cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "support/test_util.hpp"
#include "uavtl/radiomap.hpp"

namespace uavtl::cli {
namespace {

namespace fs = std::filesystem;
using uavtl::testing::data_path;
using uavtl::testing::slurp;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "uavtl");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("uavtl_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

std::vector<std::vector<std::string>> read_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    rows.push_back(cells);
  }
  return rows;
}

void expect_rectangular(const std::string& file) {
  const auto rows = read_csv(slurp(file));
  ASSERT_FALSE(rows.empty()) << file;
  for (std::size_t i = 0; i < rows.size(); ++i)
    EXPECT_EQ(rows[i].size(), rows.front().size()) << file << " line " << i + 1;
}

TEST_F(CliTest, GenEnvIsDeterministicAndPresetsDiffer) {
  ASSERT_EQ(invoke({"gen-env", "--preset", "env1", "--seed", "3", "--out", path("a")}).code, kOk);
  ASSERT_EQ(invoke({"gen-env", "--preset", "env1", "--seed", "3", "--out", path("b")}).code, kOk);
  ASSERT_EQ(invoke({"gen-env", "--preset", "env2", "--seed", "3", "--out", path("c")}).code, kOk);
  for (const char* f : {"environment.json", "sinr.grid", "outage.map", "outage_cells.csv"}) {
    const std::string a = slurp(path(std::string("a/") + f));
    ASSERT_FALSE(a.empty()) << f;
    EXPECT_EQ(a, slurp(path(std::string("b/") + f))) << f;
  }
  EXPECT_NE(slurp(path("a/outage.map")), slurp(path("c/outage.map")));
  const auto m = radiomap::parse_outage(slurp(path("a/outage.map")));
  EXPECT_EQ(m.geometry.cols, 50);
  EXPECT_EQ(m.geometry.rows, 50);
  expect_rectangular(path("a/outage_cells.csv"));
  EXPECT_EQ(read_csv(slurp(path("a/outage_cells.csv"))).size(), 2501u);
}

TEST_F(CliTest, IngestReproducesTheGoldenOutage) {
  ASSERT_EQ(invoke({"ingest", "--grid", data_path("fixture_a.grid"), "--gamma-th", "3", "--out", path("i")}).code, kOk);
  EXPECT_EQ(radiomap::parse_outage(slurp(path("i/outage.map"))),
            radiomap::parse_outage(slurp(data_path("fixture_a.outage"))));
  ASSERT_EQ(invoke({"ingest", "--grid", data_path("fixture_a.grid"), "--gamma-th", "3", "--cols", "7", "--rows", "7",
                    "--out", path("j")}).code,
            kOk);
  EXPECT_EQ(radiomap::parse_outage(slurp(path("j/outage.map"))),
            radiomap::parse_outage(slurp(data_path("fixture_a.rescaled.outage"))));
}

TEST_F(CliTest, ErrorsMapToExitCodes) {
  const std::string cfg = data_path("tiny_compare.json");
  Result r = invoke({"train", "--config", cfg, "--mode", "transfer", "--out", path("t")});
  EXPECT_EQ(r.code, kUsage);
  EXPECT_NE(r.err.find("--base"), std::string::npos);
  EXPECT_EQ(invoke({"train", "--config", cfg, "--base", "x.ckpt", "--out", path("t")}).code, kUsage);
  EXPECT_EQ(invoke({"frobnicate"}).code, kUsage);
  EXPECT_EQ(invoke({}).code, kUsage);
  EXPECT_EQ(invoke({"compare", "--config", path("missing.json")}).code, kConfig);
  EXPECT_EQ(invoke({"train", "--config", cfg, "--mode", "transfer", "--base", path("missing.ckpt"), "--out", path("t")}).code,
            kConfig);
  {
    std::ofstream(path("bad.grid")) << "GRID v1 2 2 5 0 0\n1 2\n3 zz\n";
  }
  r = invoke({"ingest", "--grid", path("bad.grid"), "--out", path("i")});
  EXPECT_EQ(r.code, kData);
  EXPECT_NE(r.err.find("row 1, col 1"), std::string::npos);
  {
    std::ofstream(path("bad.json")) << R"({"environments": [{"preset": "env1"}], "bogus": 1})";
  }
  r = invoke({"compare", "--config", path("bad.json"), "--out", path("o")});
  EXPECT_EQ(r.code, kConfig);
  EXPECT_NE(r.err.find("bogus"), std::string::npos);
}

TEST_F(CliTest, TrainThenTransferFromTheCheckpoint) {
  const std::string cfg = data_path("tiny_compare.json");
  ASSERT_EQ(invoke({"train", "--config", cfg, "--env", "A", "--out", path("s")}).code, kOk);
  for (const char* f : {"record.csv", "episodes.csv", "final.ckpt", "environment_summary.json"})
    EXPECT_TRUE(fs::exists(path(std::string("s/") + f))) << f;
  ASSERT_EQ(invoke({"train", "--config", cfg, "--env", "B", "--mode", "transfer", "--base", path("s/final.ckpt"),
                    "--out", path("t")}).code,
            kOk);
  expect_rectangular(path("t/episodes.csv"));
  EXPECT_EQ(slurp(path("t/episodes.csv")).substr(0, 34), "episode,reward,success,energy_j,st");
  EXPECT_EQ(invoke({"train", "--config", cfg, "--env", "Z", "--out", path("u")}).code, kUsage);
}

TEST_F(CliTest, CompareIsByteIdenticalAcrossRuns) {
  const std::string cfg = data_path("tiny_compare.json");
  ASSERT_EQ(invoke({"compare", "--config", cfg, "--out", path("x")}).code, kOk);
  ASSERT_EQ(invoke({"compare", "--config", cfg, "--jobs", "2", "--out", path("y")}).code, kOk);
  for (const char* f : {"table.csv", "runs.csv", "ratios.csv", "rewards_B.csv"}) {
    EXPECT_EQ(slurp(path(std::string("x/") + f)), slurp(path(std::string("y/") + f))) << f;
    expect_rectangular(path(std::string("x/") + f));
  }
}

TEST_F(CliTest, ComparisonTableLayoutAndSavings) {
  ASSERT_EQ(invoke({"compare", "--config", data_path("tiny_compare.json"), "--out", path("x")}).code, kOk);
  const auto rows = read_csv(slurp(path("x/table.csv")));
  ASSERT_EQ(rows.size(), 10u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"Metric", "B DDQN", "B Transfer"}));
  const char* metrics[] = {"Convergence Episodes", "Convergence Time (h)", "Episodes to 95% Success Rate",
                           "Energy Consumption (Wh)"};
  const char* savings_names[] = {"Convergence Episodes Savings (%)", "Convergence Time Savings (%)",
                                 "Episodes to 95% Success Rate Savings (%)", "Energy Savings (%)"};
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(rows[static_cast<std::size_t>(i) + 1][0], metrics[i]);
    const auto& savings = rows[static_cast<std::size_t>(i) + 5];
    EXPECT_EQ(savings[0], savings_names[i]);
    EXPECT_EQ(savings[1], "NA");
    const double s = std::stod(rows[static_cast<std::size_t>(i) + 1][1]);
    const double t = std::stod(rows[static_cast<std::size_t>(i) + 1][2]);
    EXPECT_NEAR(std::stod(savings[2]), (1.0 - t / s) * 100.0, 1e-9);
  }
  EXPECT_EQ(rows[9][0], "Partial");
  EXPECT_EQ(rows[9][1], "no");
  const double wh = std::stod(rows[4][1]);
  const double h = std::stod(rows[2][1]);
  EXPECT_GT(wh, 0.0);
  EXPECT_GT(h, 0.0);
}

TEST_F(CliTest, ReportWritesPerEnvironmentArtifacts) {
  ASSERT_EQ(invoke({"report", "--config", data_path("tiny_compare.json"), "--seed", "4", "--out", path("r")}).code, kOk);
  const auto rows = read_csv(slurp(path("r/report.csv")));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0][0], "env_id");
  EXPECT_EQ(rows[1][0], "A");
  EXPECT_EQ(rows[1][6], "1");  // eta_time of the base environment
  expect_rectangular(path("r/report.csv"));
  std::size_t ckpts = 0;
  for (const auto& e : fs::directory_iterator(path("r")))
    if (e.path().extension() == ".ckpt") ++ckpts;
  EXPECT_EQ(ckpts, 4u);
}

}  // namespace
}  // namespace uavtl::cli
