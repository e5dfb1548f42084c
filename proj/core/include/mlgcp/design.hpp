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
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mlgcp/model.hpp"
#include "mlgcp/pcf.hpp"

namespace mlgcp {

/// Elastic-net penalty lambda * sum_il [(1 - xi) a^2 / 2 + xi |a|] on alpha.
struct Penalty {
  double lambda = 0.0;
  double xi = 1.0;

  void validate() const;
  double term(double a) const;
  double value(const Eigen::MatrixXd& alpha) const;
};

/// Correlation rows for a lag grid: entry (k, l) = r(t_k; scales_l).
Eigen::MatrixXd correlation_rows(std::span<const double> lags, const Eigen::VectorXd& scales);
/// Derivatives of correlation_rows with respect to log(scales_l).
Eigen::MatrixXd correlation_rows_dlog(std::span<const double> lags,
                                      const Eigen::VectorXd& scales);

/// Least-squares design for all ordered pairs (i, j).
///
/// Responses Y_ijk = sqrt(w_ijk) log ghat_ij(t_k) and the square-root weights
/// are immutable and shared between copies. Row k of X_ij is
/// sqrt(w_ijk) [r_1(t_k), ..., r_q(t_k)], with c_i(t_k) appended for i = j;
/// the correlation rows are cached for the most recent (phi, psi).
///
/// The estimate and the weights must be symmetric in (i, j): the block
/// updates rely on Y_ij = Y_ji.
class DesignBlocks {
 public:
  DesignBlocks() = default;
  DesignBlocks(const PcfEstimate& est, const PairLagArray& weights);

  std::size_t types() const { return data_ ? data_->response.types() : 0; }
  std::size_t lag_count() const { return data_ ? data_->lags.size() : 0; }
  const std::vector<double>& lags() const { return data_->lags; }
  const Window& window() const { return data_->window; }

  double response(std::size_t i, std::size_t j, std::size_t k) const {
    return data_->response(i, j, k);
  }
  double sqrt_weight(std::size_t i, std::size_t j, std::size_t k) const {
    return data_->sqrt_weight(i, j, k);
  }
  const PairLagArray& responses() const { return data_->response; }
  const PairLagArray& sqrt_weights() const { return data_->sqrt_weight; }

  /// Refreshes the cached correlation rows for whichever of phi, psi changed.
  void set_scales(const Eigen::VectorXd& phi, const Eigen::VectorXd& psi);
  bool has_scales(const Eigen::VectorXd& phi, const Eigen::VectorXd& psi) const;
  const Eigen::VectorXd& phi() const { return phi_; }
  const Eigen::VectorXd& psi() const { return psi_; }

  const Eigen::MatrixXd& common_rows() const { return common_; }     // L x q
  const Eigen::MatrixXd& specific_rows() const { return specific_; }  // L x p
  /// Number of times a block of cached rows has been recomputed.
  std::size_t cache_refreshes() const { return refreshes_; }

  /// Dense X_ij (L x q, or L x (q + 1) on the diagonal) at the cached scales.
  Eigen::MatrixXd design_matrix(std::size_t i, std::size_t j) const;
  Eigen::VectorXd response_vector(std::size_t i, std::size_t j) const;

 private:
  struct Data {
    Window window;
    std::vector<double> lags;
    PairLagArray response;
    PairLagArray sqrt_weight;
  };
  std::shared_ptr<const Data> data_;
  Eigen::VectorXd phi_;
  Eigen::VectorXd psi_;
  Eigen::MatrixXd common_;
  Eigen::MatrixXd specific_;
  std::size_t refreshes_ = 0;
};

/// Design with the correlation rows set to params' scales.
DesignBlocks build_design(const PcfEstimate& est, const PairLagArray& weights,
                          const ModelParams& params);

/// Weighted residuals Y_ijk - (X_ij beta_ij)_k for every ordered pair.
PairLagArray residuals(const DesignBlocks& blocks, const ModelParams& params);

/// Sum over all ordered pairs (i, j) of ||Y_ij - X_ij beta_ij||^2.
double objective_q(const DesignBlocks& blocks, const ModelParams& params);

/// objective_q plus the elastic-net penalty on alpha.
double objective_q_lambda(const DesignBlocks& blocks, const ModelParams& params,
                          const Penalty& penalty);

/// Gradient of objective_q with respect to alpha, sigma2, log(phi), log(psi).
struct ObjectiveGradient {
  Eigen::MatrixXd alpha;
  Eigen::VectorXd sigma2;
  Eigen::VectorXd log_phi;
  Eigen::VectorXd log_psi;
};

ObjectiveGradient objective_gradient(const DesignBlocks& blocks, const ModelParams& params);

}  // namespace mlgcp
