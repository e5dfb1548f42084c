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

#include "mlgcp/cli/study.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include "json.hpp"
#include "mlgcp/design.hpp"
#include "mlgcp/error.hpp"
#include "mlgcp/parallel.hpp"
#include "mlgcp/pcf.hpp"
#include "mlgcp/selection.hpp"

namespace mlgcp::cli {

void RmseAccumulator::add(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols()) {
    throw InputError("RMSE: estimate and truth shapes differ");
  }
  if (count_ == 0) {
    sum_sq_ = Eigen::MatrixXd::Zero(truth.rows(), truth.cols());
  } else if (sum_sq_.rows() != truth.rows() || sum_sq_.cols() != truth.cols()) {
    throw InputError("RMSE: shape changed between replicates");
  }
  sum_sq_ += (estimate - truth).array().square().matrix();
  ++count_;
}

double RmseAccumulator::value() const {
  if (count_ == 0 || sum_sq_.size() == 0) return 0.0;
  return (sum_sq_.array() / static_cast<double>(count_)).sqrt().mean();
}

SelectionMode parse_selection_mode(const std::string& text) {
  if (text == "fixed") return SelectionMode::fixed;
  if (text == "min") return SelectionMode::min;
  if (text == "one-se" || text == "1se" || text == "one_se") return SelectionMode::one_se;
  throw InputError("unknown selection mode '" + text + "' (fixed, min, one-se)");
}

std::string to_string(SelectionMode mode) {
  switch (mode) {
    case SelectionMode::fixed:
      return "fixed";
    case SelectionMode::min:
      return "min";
    case SelectionMode::one_se:
      return "one-se";
  }
  return "fixed";
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Eigen::VectorXd pv_at_zero(const ModelParams& params) {
  Eigen::VectorXd pv(static_cast<Eigen::Index>(params.types()));
  for (std::size_t i = 0; i < params.types(); ++i) {
    try {
      pv[static_cast<Eigen::Index>(i)] = proportion_of_variance(params, i, 0.0);
    } catch (const NumericalError&) {
      pv[static_cast<Eigen::Index>(i)] = 0.0;
    }
  }
  return pv;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

ReplicateOutcome run_replicate(const StudyConfig& config, std::size_t r) {
  ReplicateOutcome out;
  out.index = r;
  const auto& truth = config.scenario.truth;
  const auto start = Clock::now();
  if (config.oracle_estimator) {
    out.estimate = truth;
    out.q_eff = q_eff(truth.alpha);
    out.ok = true;
    out.converged = true;
    return out;
  }

  SimScenario scenario = config.scenario;
  scenario.seed = derive_seed(config.seed, r, 0);
  const auto pattern = sample_mlgcp(scenario);
  const auto est = estimate_pcf(pattern, 1);
  const auto weights = default_weights(est);
  const DesignBlocks blocks(est, weights);
  const std::size_t p = est.types();

  FitConfig fit_config = config.fit;
  fit_config.seed = derive_seed(config.seed, r, 1);
  fit_config.scale_floor = 1e-8 * scenario.window.diameter();

  if (config.mode == SelectionMode::fixed) {
    if (config.lambdas.size() != 1) throw InputError("fixed mode takes exactly one lambda");
    const auto init = default_init(p, config.q, scenario.window, fit_config.seed);
    const auto fit_start = Clock::now();
    const auto res = fit(blocks, init, Penalty{config.lambdas.front(), config.xi}, fit_config);
    out.seconds = seconds_since(fit_start);
    out.estimate = res.params;
    out.objective = res.q;
    out.converged = res.converged;
    if (config.baseline) {
      const auto base_start = Clock::now();
      const auto base = fit_joint_bfgs(blocks, init);
      out.baseline_seconds = seconds_since(base_start);
      out.baseline_objective = base.q;
    }
  } else {
    std::vector<std::size_t> q_grid = config.q_grid;
    if (q_grid.empty()) {
      for (std::size_t q = 1; q <= std::min<std::size_t>(p, 10); ++q) q_grid.push_back(q);
    }
    const auto folds =
        make_folds(p, est.lags.size(), config.folds, config.block, derive_seed(config.seed, r, 2));
    CvGridOptions options;
    options.fit = fit_config;
    const auto grid =
        evaluate_cv_grid(est, weights, q_grid, config.lambdas, config.xi, folds, options);
    const auto pick =
        config.mode == SelectionMode::min ? select_min(grid) : select_one_se(grid);
    const auto& cell = grid.cells[pick.cell];
    out.estimate = cell.params;
    out.objective = objective_q(blocks, cell.params);
    out.converged = true;
    out.seconds = seconds_since(start);
  }
  out.q_eff = q_eff(out.estimate.alpha);
  out.ok = true;
  return out;
}

}  // namespace

StudyReport aggregate_study(const ModelParams& truth, std::vector<ReplicateOutcome> outcomes) {
  StudyReport report;
  report.replicates = outcomes.size();
  RmseAccumulator aat;
  RmseAccumulator sigma2;
  RmseAccumulator psi;
  RmseAccumulator pv0;
  const Eigen::MatrixXd truth_aat = truth.alpha * truth.alpha.transpose();
  const Eigen::VectorXd truth_pv0 = pv_at_zero(truth);
  const std::size_t q_true = q_eff(truth.alpha);
  std::vector<double> objectives;
  std::vector<double> baseline;
  double fit_seconds = 0.0;
  double base_seconds = 0.0;
  for (const auto& o : outcomes) {
    if (!o.ok) {
      ++report.failures;
      continue;
    }
    aat.add(o.estimate.alpha * o.estimate.alpha.transpose(), truth_aat);
    sigma2.add(o.estimate.sigma2, truth.sigma2);
    psi.add(o.estimate.psi, truth.psi);
    pv0.add(pv_at_zero(o.estimate), truth_pv0);
    objectives.push_back(o.objective);
    fit_seconds += o.seconds;
    if (o.baseline_objective) {
      baseline.push_back(*o.baseline_objective);
      base_seconds += o.baseline_seconds;
    }
    const std::size_t gap = o.q_eff > q_true ? o.q_eff - q_true : q_true - o.q_eff;
    ++report.q_eff_error[gap];
  }
  report.rmse_alpha_alpha_t = aat.value();
  report.rmse_sigma2 = sigma2.value();
  report.rmse_psi = psi.value();
  report.rmse_pv0 = pv0.value();
  if (!objectives.empty()) {
    const double n = static_cast<double>(objectives.size());
    report.mean_objective = std::accumulate(objectives.begin(), objectives.end(), 0.0) / n;
    report.median_objective = median(objectives);
    report.mean_fit_seconds = fit_seconds / n;
  }
  if (!baseline.empty()) {
    const double n = static_cast<double>(baseline.size());
    report.baseline_mean_objective = std::accumulate(baseline.begin(), baseline.end(), 0.0) / n;
    report.baseline_median_objective = median(baseline);
    report.baseline_mean_seconds = base_seconds / n;
  }
  report.outcomes = std::move(outcomes);
  return report;
}

StudyReport run_study(const StudyConfig& config) {
  config.scenario.validate();
  config.fit.validate();
  const auto start = Clock::now();
  std::vector<ReplicateOutcome> outcomes(config.replicates);
  parallel_for(config.replicates, config.threads, [&](std::size_t r) {
    try {
      outcomes[r] = run_replicate(config, r);
    } catch (const std::exception& e) {
      outcomes[r] = ReplicateOutcome{};
      outcomes[r].index = r;
      outcomes[r].error = e.what();
    }
  });
  auto report = aggregate_study(config.scenario.truth, std::move(outcomes));
  report.wall_seconds = seconds_since(start);
  return report;
}

std::string study_report_json(const StudyReport& report, const StudyConfig& config,
                              int indent) {
  using nlohmann::json;
  json doc;
  doc["mode"] = to_string(config.mode);
  doc["replicates"] = report.replicates;
  doc["failures"] = report.failures;
  doc["seed"] = config.seed;
  doc["rmse"] = {{"alpha_alpha_t", report.rmse_alpha_alpha_t},
                 {"sigma2", report.rmse_sigma2},
                 {"psi", report.rmse_psi},
                 {"pv0", report.rmse_pv0}};
  doc["objective"] = {{"mean", report.mean_objective}, {"median", report.median_objective}};
  if (report.baseline_mean_objective) {
    doc["baseline_objective"] = {{"mean", *report.baseline_mean_objective},
                                 {"median", *report.baseline_median_objective}};
  }
  json gaps = json::object();
  for (const auto& [gap, count] : report.q_eff_error) gaps[std::to_string(gap)] = count;
  doc["q_eff_abs_error"] = std::move(gaps);
  json reps = json::array();
  for (const auto& o : report.outcomes) {
    json rj = {{"index", o.index}, {"ok", o.ok}};
    if (o.ok) {
      rj["q_eff"] = o.q_eff;
      rj["objective"] = o.objective;
      rj["converged"] = o.converged;
      if (o.baseline_objective) rj["baseline_objective"] = *o.baseline_objective;
    } else {
      rj["error"] = o.error;
    }
    reps.push_back(std::move(rj));
  }
  doc["replicate_results"] = std::move(reps);
  json timing = {{"wall_seconds", report.wall_seconds},
                 {"mean_fit_seconds", report.mean_fit_seconds}};
  if (report.baseline_mean_objective) timing["baseline_mean_seconds"] = report.baseline_mean_seconds;
  doc["timing"] = std::move(timing);
  return doc.dump(indent);
}

}  // namespace mlgcp::cli
