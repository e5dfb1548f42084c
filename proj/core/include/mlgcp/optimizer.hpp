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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mlgcp/bfgs.hpp"
#include "mlgcp/design.hpp"
#include "mlgcp/model.hpp"

namespace mlgcp {

struct LineSearchConfig {
  double initial_step = 1.0;
  double factor = 0.5;
  int max_backtracks = 30;
};

struct FitConfig {
  int max_outer_iters = 500;
  /// Stop when |Q_m - Q_{m-1}| <= rel_tol * max(1, |Q_{m-1}|).
  double rel_tol = 1e-6;
  LineSearchConfig line_search;
  /// Coordinate-descent sweeps on the proximal model: stop when the largest
  /// coordinate change is <= cd_tol * max(1, max |alpha_il|).
  int cd_max_sweeps = 100;
  double cd_tol = 1e-8;
  /// Quasi-Newton budget for each phi / psi update.
  int scale_max_iters = 25;
  double scale_gradient_tol = 1e-8;
  /// Lower bound for phi and psi; callers scale it with the window diameter.
  double scale_floor = 1e-8 * std::sqrt(2.0);
  std::uint64_t seed = 1;
  /// Record Q and Q_lambda after every block update, not only per sweep.
  bool record_blocks = false;

  void validate() const;
};

struct BlockStep {
  int iteration = 0;
  std::string block;  // "sigma2[i]", "alpha[i]", "phi", "psi", "sweep"
  double q = 0.0;
  double q_lambda = 0.0;
  double step = 0.0;  // accepted line-search step for alpha rows
};

struct FitResult {
  ModelParams params;
  double lambda = 0.0;
  double xi = 1.0;
  std::vector<double> trace;     // Q_lambda at start and after every sweep
  std::vector<BlockStep> steps;  // per-sweep entries, or per-block with record_blocks
  bool converged = false;
  int iterations = 0;
  int stalled_rows = 0;  // alpha-row updates whose line search found no decrease
  double q = 0.0;
  double q_lambda = 0.0;
};

/// Clamped least-squares update of sigma2_i given everything else. When the
/// c_i design column is identically zero the current value is returned and
/// *active (if given) is set to false.
double update_sigma2(const DesignBlocks& blocks, const ModelParams& params, std::size_t i,
                     bool* active = nullptr);

/// Stacked least-squares form of the proximal-Newton model for row i,
/// expanded around `current_row`: one (Y*_ij, X*_ij) pair per j, plus the
/// Gram matrix sum_j X*^T X* and cross products sum_j X*^T Y*.
struct ProxNewtonSystem {
  std::vector<Eigen::VectorXd> ystar;
  std::vector<Eigen::MatrixXd> xstar;
  Eigen::MatrixXd gram;
  Eigen::VectorXd cross;

  /// sum_j ||Y*_ij - X*_ij row||^2 + penalty(row).
  double model_value(const Eigen::VectorXd& row, const Penalty& penalty) const;
};

ProxNewtonSystem prox_newton_transform(const DesignBlocks& blocks, const ModelParams& params,
                                       std::size_t i, const Eigen::VectorXd& current_row);

/// sign(a) (|a| - gamma)_+
double soft_threshold(double a, double gamma);

/// Exact minimizer of the proximal model in coordinate l with the other
/// coordinates of `row` held fixed. Returns 0 when the coordinate's
/// curvature is zero or negligible next to the largest Gram diagonal.
double coordinate_update_alpha(const ProxNewtonSystem& system, const Eigen::VectorXd& row,
                               std::size_t l, const Penalty& penalty);

/// Cyclic coordinate descent on the proximal model starting from `start`.
Eigen::VectorXd minimize_prox_model(const ProxNewtonSystem& system, Eigen::VectorXd start,
                                    const Penalty& penalty, const FitConfig& config);

/// The part of Q_lambda that depends on row i of alpha (and sigma2_i):
/// 2 sum_{j != i} ||Y_ij - X_ij diag(alpha_j.) row||^2
///   + ||Y_ii - X_ii beta_ii||^2 + lambda sum_l p(row_l).
double row_objective(const DesignBlocks& blocks, const ModelParams& params, std::size_t i,
                     const Eigen::VectorXd& row, const Penalty& penalty);

struct RowUpdate {
  Eigen::VectorXd row;
  double step = 0.0;
  bool stalled = false;
  double before = 0.0;  // row_objective at the old row
  double after = 0.0;   // row_objective at the returned row
};

/// One proximal-Newton step for row i: coordinate descent on the quadratic
/// model, then backtracking on the true row objective until it strictly
/// decreases. If no step decreases it the row is returned unchanged.
RowUpdate update_alpha_row(const DesignBlocks& blocks, const ModelParams& params, std::size_t i,
                           const Penalty& penalty, const FitConfig& config);

enum class ScaleBlock { phi, psi };

/// Quasi-Newton update of log(phi) or log(psi) with everything else fixed.
/// Scales whose gradient is identically zero (an all-zero alpha column for
/// phi_l, sigma2_i = 0 or no diagonal weight for psi_i) are left unchanged.
/// Q never increases.
Eigen::VectorXd update_scales(const DesignBlocks& blocks, const ModelParams& params,
                              ScaleBlock which, const FitConfig& config);

/// Cyclical block descent on Q_lambda: per sweep, for every type i update
/// sigma2_i then alpha_i., then phi, then psi.
FitResult fit(const DesignBlocks& blocks, const ModelParams& init, const Penalty& penalty,
              const FitConfig& config);

/// Fits along an ascending lambda sequence, warm-starting each fit from the
/// previous estimate.
std::vector<FitResult> fit_path(const DesignBlocks& blocks, const ModelParams& init,
                                std::span<const double> lambdas, double xi,
                                const FitConfig& config);

/// alpha ~ N(0, 0.05^2), sigma2 = 1, phi and psi ~ U[0.01, 0.05] scaled by
/// the window's size relative to the unit square. Deterministic in seed.
ModelParams default_init(std::size_t p, std::size_t q, const Window& window,
                         std::uint64_t seed);

/// Joint quasi-Newton baseline: BFGS on (alpha, sigma2, phi, psi) minimizing
/// Q with no penalty. With log_parameters the positive parameters are
/// optimized on the log scale instead.
struct JointBfgsOptions {
  bool log_parameters = false;
  int max_iterations = 100;
  double relative_tolerance = 1.490116119384765625e-8;
  double sigma2_floor = 1e-8;
};

FitResult fit_joint_bfgs(const DesignBlocks& blocks, const ModelParams& init,
                         const JointBfgsOptions& options = {});

}  // namespace mlgcp
