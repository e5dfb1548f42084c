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

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mlgcp/model.hpp"
#include "mlgcp/optimizer.hpp"
#include "mlgcp/simulator.hpp"

namespace mlgcp::cli {

/// Entrywise RMSE over replicates, averaged over entries:
/// mean_e sqrt(mean_r (est_re - truth_e)^2).
class RmseAccumulator {
 public:
  void add(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& truth);
  double value() const;
  std::size_t count() const { return count_; }

 private:
  Eigen::MatrixXd sum_sq_;
  std::size_t count_ = 0;
};

enum class SelectionMode { fixed, min, one_se };

SelectionMode parse_selection_mode(const std::string& text);
std::string to_string(SelectionMode mode);

struct StudyConfig {
  SimScenario scenario = scenario_p5();
  std::size_t replicates = 20;
  SelectionMode mode = SelectionMode::fixed;
  std::size_t q = 2;                      // fixed mode
  std::vector<std::size_t> q_grid;        // CV modes; empty means 1..min(p, 10)
  std::vector<double> lambdas{0.0};       // fixed mode uses the single entry
  double xi = 1.0;
  std::size_t folds = 8;
  std::size_t block = 5;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  bool baseline = false;  // also run the joint BFGS baseline from the same start
  /// Test hook: skip simulation and fitting and report the truth as the estimate.
  bool oracle_estimator = false;
  FitConfig fit;
};

struct ReplicateOutcome {
  std::size_t index = 0;
  bool ok = false;
  std::string error;
  ModelParams estimate;
  std::size_t q_eff = 0;
  double objective = 0.0;  // final Q
  bool converged = false;
  double seconds = 0.0;
  std::optional<double> baseline_objective;
  double baseline_seconds = 0.0;
};

struct StudyReport {
  std::size_t replicates = 0;
  std::size_t failures = 0;
  double rmse_alpha_alpha_t = 0.0;
  double rmse_sigma2 = 0.0;
  double rmse_psi = 0.0;
  double rmse_pv0 = 0.0;
  double mean_objective = 0.0;
  double median_objective = 0.0;
  std::optional<double> baseline_mean_objective;
  std::optional<double> baseline_median_objective;
  double mean_fit_seconds = 0.0;
  double baseline_mean_seconds = 0.0;
  double wall_seconds = 0.0;
  std::map<std::size_t, std::size_t> q_eff_error;  // |q_eff - q_true| -> count
  std::vector<ReplicateOutcome> outcomes;
};

/// Runs simulate -> estimate -> fit for every replicate; replicate r draws
/// all its randomness from derive_seed(config.seed, r, .).
StudyReport run_study(const StudyConfig& config);

/// Aggregates finished replicates against the scenario truth.
StudyReport aggregate_study(const ModelParams& truth, std::vector<ReplicateOutcome> outcomes);

std::string study_report_json(const StudyReport& report, const StudyConfig& config,
                              int indent = 2);

}  // namespace mlgcp::cli
