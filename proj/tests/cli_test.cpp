// Copyright 2026 The mlgcp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "json.hpp"
#include "mlgcp/cli/commands.hpp"
#include "mlgcp/cli/study.hpp"
#include "mlgcp/cli/summary.hpp"
#include "mlgcp/params_json.hpp"
#include "mlgcp/pattern.hpp"
#include "mlgcp/simulator.hpp"

namespace mlgcp::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("mlgcp_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return run_cli(args, out_, err_);
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

TEST_F(CliTest, SimulateWritesDeterministicFiles) {
  ASSERT_EQ(run({"simulate", "--replicates", "2", "--seed", "5", "--resolution", "64", "--out-dir",
                 path("a")}),
            kOk)
      << err_.str();
  ASSERT_EQ(run({"simulate", "--replicates", "2", "--seed", "5", "--resolution", "64", "--out-dir",
                 path("b")}),
            kOk);
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(path("a"))) files.push_back(e.path().filename().string());
  std::sort(files.begin(), files.end());
  ASSERT_EQ(files, (std::vector<std::string>{"pattern_0001.csv", "pattern_0002.csv"}));
  for (const auto& f : files) {
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f));
  }
  const auto pat = read_pattern_csv(dir_ / "a" / files[0], Window{});
  EXPECT_EQ(pat.types(), 5u);
  EXPECT_NE(slurp(dir_ / "a" / files[0]), slurp(dir_ / "a" / files[1]));
}

TEST_F(CliTest, SimulateZeroReplicates) {
  EXPECT_EQ(run({"simulate", "--replicates", "0", "--out-dir", path("none")}), kOk);
  EXPECT_FALSE(fs::exists(path("none")));
}

TEST_F(CliTest, PipelineIsReproducible) {
  ASSERT_EQ(run({"simulate", "--replicates", "1", "--resolution", "64", "--out-dir", path("")}), kOk);
  const auto pattern = path("pattern_0001.csv");
  ASSERT_EQ(run({"pcf", "--input", pattern, "--out", path("pcf.csv")}), kOk) << err_.str();
  EXPECT_EQ(slurp(path("pcf.csv")).substr(0, 20), "i,j,lag,ghat,weight\n");
  for (const char* name : {"fit1.json", "fit2.json"}) {
    ASSERT_EQ(run({"fit", "--pcf", path("pcf.csv"), "--q", "2", "--lambda", "0", "--out", path(name)}),
              kOk)
        << err_.str();
  }
  EXPECT_EQ(slurp(path("fit1.json")), slurp(path("fit2.json")));
  EXPECT_EQ(read_params(path("fit1.json")).factors(), 2u);
  ASSERT_EQ(run({"summarize", "--params", path("fit1.json"), "--out", path("sum.json")}), kOk);
  const auto sum = json::parse(slurp(path("sum.json")));
  EXPECT_TRUE(sum.contains("proportion_of_variance"));
  EXPECT_EQ(sum["merge_tree"]["linkage"], "average");
}

TEST_F(CliTest, NoiselessFitReachesZero) {
  write_params(path("truth.json"), scenario_p5().truth);
  ASSERT_EQ(run({"fit", "--noiseless-from", path("truth.json"), "--init", path("truth.json"),
                 "--q", "2", "--out", path("fit.json"), "--path-out", path("path.json")}),
            kOk)
      << err_.str();
  const auto path_doc = json::parse(slurp(path("path.json")));
  ASSERT_EQ(path_doc.size(), 1u);
  EXPECT_LT(path_doc[0]["q_objective"].get<double>(), 1e-10);
}

TEST_F(CliTest, FitLogAndPath) {
  write_params(path("truth.json"), scenario_p5().truth);
  ASSERT_EQ(run({"fit", "--noiseless-from", path("truth.json"), "--q", "2", "--lambda", "0,0.1",
                 "--max-iter", "5", "--log", path("log.csv"), "--path-out", path("path.json"),
                 "--out", path("fit.json")}),
            kOk)
      << err_.str();
  std::ifstream log(path("log.csv"));
  std::string line;
  std::getline(log, line);
  EXPECT_EQ(line, "lambda,iteration,block,q,q_lambda,step");
  int rows = 0;
  while (std::getline(log, line)) ++rows;
  EXPECT_GT(rows, 10);
  EXPECT_EQ(json::parse(slurp(path("path.json"))).size(), 2u);
}

TEST_F(CliTest, CvWritesSurfaceAndSelections) {
  write_params(path("truth.json"), scenario_p5().truth);
  ASSERT_EQ(run({"cv", "--noiseless-from", path("truth.json"), "--q", "1,2", "--lambda", "0,0.01",
                 "--xi", "0.5,1", "--folds", "3", "--max-iter", "20", "--out", path("cv.csv"),
                 "--selection", path("sel.json")}),
            kOk)
      << err_.str();
  std::ifstream cv(path("cv.csv"));
  std::string line;
  std::getline(cv, line);
  EXPECT_EQ(line, "xi,q,lambda,cv,se,q_eff,converged_folds");
  int rows = 0;
  while (std::getline(cv, line)) ++rows;
  EXPECT_EQ(rows, 2 * 2 * 2);
  const auto sel = json::parse(slurp(path("sel.json")));
  ASSERT_EQ(sel["selections"].size(), 2u);
  for (const auto& s : sel["selections"]) {
    EXPECT_TRUE(s.contains("min"));
    EXPECT_TRUE(s.contains("one_se"));
  }
}

TEST_F(CliTest, SingleCellCv) {
  write_params(path("truth.json"), scenario_p5().truth);
  ASSERT_EQ(run({"cv", "--noiseless-from", path("truth.json"), "--q", "2", "--lambda", "0",
                 "--folds", "2", "--max-iter", "10", "--out", path("cv.csv"), "--selection",
                 path("sel.json")}),
            kOk);
  const auto sel = json::parse(slurp(path("sel.json")));
  EXPECT_EQ(sel["selections"][0]["min"]["q"], 2);
}

TEST_F(CliTest, ConfigFile) {
  write_params(path("truth.json"), scenario_p5().truth);
  std::ofstream(path("cfg.json")) << R"({"fit": {"q": 1, "max-iter": 3}})";
  ASSERT_EQ(run({"fit", "--config", path("cfg.json"), "--noiseless-from", path("truth.json"),
                 "--out", path("fit.json")}),
            kOk)
      << err_.str();
  EXPECT_EQ(read_params(path("fit.json")).factors(), 1u);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run({"fit", "--input", path("missing.csv")}), kInputError);
  EXPECT_FALSE(err_.str().empty());
  EXPECT_EQ(run({"summarize"}), kInputError);
  EXPECT_EQ(run({"nonsense"}), kInputError);
  std::ofstream(path("bad.csv")) << "x,y,type\n2.0,0.5,1\n";
  EXPECT_EQ(run({"pcf", "--input", path("bad.csv")}), kInputError);
}

TEST(Summary, AverageLinkageByHand) {
  Eigen::MatrixXd d(4, 4);
  d << 0, 1, 4, 5,
       1, 0, 3, 6,
       4, 3, 0, 2,
       5, 6, 2, 0;
  const auto steps = average_linkage(d);
  ASSERT_EQ(steps.size(), 3u);
  EXPECT_EQ(steps[0].left, 0u);
  EXPECT_EQ(steps[0].right, 1u);
  EXPECT_EQ(steps[0].height, 1.0);
  EXPECT_EQ(steps[1].left, 2u);
  EXPECT_EQ(steps[1].right, 3u);
  EXPECT_EQ(steps[1].height, 2.0);
  EXPECT_EQ(steps[2].height, (4.0 + 5.0 + 3.0 + 6.0) / 4.0);
  EXPECT_EQ(steps[2].size, 4u);
}

TEST(Summary, ZeroAlphaGivesZeroCorrelationAndFlatTree) {
  auto params = scenario_p5().truth;
  params.alpha.setZero();
  const auto cov = latent_covariances(params);
  const auto corr = covariance_to_correlation(cov.common);
  EXPECT_TRUE(corr.isZero(0.0));
  const auto tree = average_linkage(row_distance_matrix(params));
  for (const auto& s : tree) EXPECT_EQ(s.height, 0.0);
  const auto doc = json::parse(summarize_json(params, std::vector<double>{0.0}));
  EXPECT_EQ(doc["q_eff"], 0);
}

TEST(Summary, PvAndHistogram) {
  const auto doc = json::parse(summarize_json(scenario_p5().truth, std::vector<double>{0.0}));
  EXPECT_NEAR(doc["proportion_of_variance"][0]["pv"][0].get<double>(), 1.0 / 3.0, 1e-12);
  EXPECT_EQ(correlation_bin_edges(), (std::vector<double>{-1, -0.5, -0.2, 0, 0.2, 0.5, 1}));
  Eigen::Matrix3d c;
  c << 1, 1.0, -0.3,
       1.0, 1, 0.0,
       -0.3, 0.0, 1;
  const auto h = correlation_histogram(c);
  EXPECT_EQ(h.counts, (std::vector<std::size_t>{0, 1, 0, 1, 0, 1}));
}

TEST(Study, RmseAccumulatorByHand) {
  RmseAccumulator acc;
  Eigen::MatrixXd truth(1, 2);
  truth << 1.0, 2.0;
  Eigen::MatrixXd a(1, 2);
  a << 1.5, 2.0;
  Eigen::MatrixXd b(1, 2);
  b << 0.5, 3.0;
  acc.add(a, truth);
  acc.add(b, truth);
  // Entry 1: sqrt((0.25 + 0.25) / 2) = 0.5; entry 2: sqrt((0 + 1) / 2).
  EXPECT_DOUBLE_EQ(acc.value(), (0.5 + std::sqrt(0.5)) / 2.0);

  RmseAccumulator shifted;
  shifted.add(truth.array() + 0.25, truth);
  shifted.add(truth.array() + 0.25, truth);
  EXPECT_DOUBLE_EQ(shifted.value(), 0.25);
}

TEST(Study, OracleEstimatorHasZeroError) {
  StudyConfig cfg;
  cfg.replicates = 1;
  cfg.oracle_estimator = true;
  const auto report = run_study(cfg);
  EXPECT_EQ(report.failures, 0u);
  EXPECT_EQ(report.rmse_alpha_alpha_t, 0.0);
  EXPECT_EQ(report.rmse_sigma2, 0.0);
  EXPECT_EQ(report.rmse_psi, 0.0);
  EXPECT_EQ(report.rmse_pv0, 0.0);
  const auto doc = json::parse(study_report_json(report, cfg));
  EXPECT_EQ(doc["mode"], "fixed");
}

TEST(Study, SelectionModeNames) {
  for (auto m : {SelectionMode::fixed, SelectionMode::min, SelectionMode::one_se}) {
    EXPECT_EQ(parse_selection_mode(to_string(m)), m);
  }
  EXPECT_THROW(parse_selection_mode("best"), std::invalid_argument);
}

}  // namespace
}  // namespace mlgcp::cli
