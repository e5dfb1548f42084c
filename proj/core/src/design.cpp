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

#include "mlgcp/design.hpp"

#include <cmath>
#include <optional>
#include <string>

#include "mlgcp/error.hpp"
#include "ordered_sum.hpp"

namespace mlgcp {

void Penalty::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InputError("lambda must be >= 0");
  if (!(xi >= 0.0 && xi <= 1.0)) throw InputError("xi must lie in [0, 1]");
}

double Penalty::term(double a) const {
  return (1.0 - xi) * a * a / 2.0 + xi * std::abs(a);
}

double Penalty::value(const Eigen::MatrixXd& alpha) const {
  if (lambda == 0.0) return 0.0;
  double s = 0.0;
  for (Eigen::Index i = 0; i < alpha.rows(); ++i) {
    for (Eigen::Index l = 0; l < alpha.cols(); ++l) s += term(alpha(i, l));
  }
  return lambda * s;
}

Eigen::MatrixXd correlation_rows(std::span<const double> lags, const Eigen::VectorXd& scales) {
  const auto L = static_cast<Eigen::Index>(lags.size());
  Eigen::MatrixXd rows(L, scales.size());
  for (Eigen::Index l = 0; l < scales.size(); ++l) {
    for (Eigen::Index k = 0; k < L; ++k) rows(k, l) = correlation(lags[k], scales[l]);
  }
  return rows;
}

Eigen::MatrixXd correlation_rows_dlog(std::span<const double> lags,
                                      const Eigen::VectorXd& scales) {
  const auto L = static_cast<Eigen::Index>(lags.size());
  Eigen::MatrixXd rows(L, scales.size());
  for (Eigen::Index l = 0; l < scales.size(); ++l) {
    for (Eigen::Index k = 0; k < L; ++k) rows(k, l) = correlation_dlog_scale(lags[k], scales[l]);
  }
  return rows;
}

DesignBlocks::DesignBlocks(const PcfEstimate& est, const PairLagArray& weights) {
  if (!est.ghat.symmetric()) throw InputError("design needs a pcf estimate symmetric in (i, j)");
  if (!weights.symmetric()) throw InputError("design needs weights symmetric in (i, j)");
  auto logr = log_pcf_response(est, weights);
  auto data = std::make_shared<Data>();
  data->window = est.window;
  data->lags = est.lags;
  data->response = std::move(logr.response);
  data->sqrt_weight = PairLagArray(est.types(), est.lags.size());
  for (std::size_t i = 0; i < est.types(); ++i) {
    for (std::size_t j = 0; j < est.types(); ++j) {
      for (std::size_t k = 0; k < est.lags.size(); ++k) {
        data->sqrt_weight(i, j, k) = std::sqrt(logr.weights(i, j, k));
      }
    }
  }
  data_ = std::move(data);
  common_.resize(static_cast<Eigen::Index>(est.lags.size()), 0);
  specific_.resize(static_cast<Eigen::Index>(est.lags.size()), 0);
}

bool DesignBlocks::has_scales(const Eigen::VectorXd& phi, const Eigen::VectorXd& psi) const {
  return phi.size() == phi_.size() && psi.size() == psi_.size() && phi == phi_ && psi == psi_ &&
         common_.cols() == phi.size() && specific_.cols() == psi.size();
}

void DesignBlocks::set_scales(const Eigen::VectorXd& phi, const Eigen::VectorXd& psi) {
  if (static_cast<std::size_t>(psi.size()) != types()) {
    throw InputError("psi length must equal the number of types");
  }
  const bool phi_same = phi.size() == phi_.size() && phi == phi_ && common_.cols() == phi.size();
  const bool psi_same =
      psi.size() == psi_.size() && psi == psi_ && specific_.cols() == psi.size();
  if (!phi_same) {
    phi_ = phi;
    common_ = correlation_rows(data_->lags, phi_);
    ++refreshes_;
  }
  if (!psi_same) {
    psi_ = psi;
    specific_ = correlation_rows(data_->lags, psi_);
    ++refreshes_;
  }
}

Eigen::MatrixXd DesignBlocks::design_matrix(std::size_t i, std::size_t j) const {
  const auto L = static_cast<Eigen::Index>(lag_count());
  const auto q = common_.cols();
  Eigen::MatrixXd x(L, i == j ? q + 1 : q);
  for (Eigen::Index k = 0; k < L; ++k) {
    const double sw = sqrt_weight(i, j, static_cast<std::size_t>(k));
    x.row(k).head(q) = sw * common_.row(k);
    if (i == j) x(k, q) = sw * specific_(k, static_cast<Eigen::Index>(i));
  }
  return x;
}

Eigen::VectorXd DesignBlocks::response_vector(std::size_t i, std::size_t j) const {
  const auto span = data_->response.pair(i, j);
  return Eigen::Map<const Eigen::VectorXd>(span.data(), static_cast<Eigen::Index>(span.size()));
}

DesignBlocks build_design(const PcfEstimate& est, const PairLagArray& weights,
                          const ModelParams& params) {
  params.validate();
  if (params.types() != est.types()) {
    throw InputError("params have " + std::to_string(params.types()) +
                     " types but the estimate has " + std::to_string(est.types()));
  }
  DesignBlocks blocks(est, weights);
  blocks.set_scales(params.phi, params.psi);
  return blocks;
}

namespace {

void check_dims(const DesignBlocks& blocks, const ModelParams& params) {
  if (params.types() != blocks.types() || params.alpha.rows() != params.sigma2.size() ||
      params.alpha.cols() != params.phi.size() || params.psi.size() != params.sigma2.size()) {
    throw InputError("params dimensions do not match the design");
  }
}

// Correlation rows for params' scales, taken from the cache when it matches.
struct Rows {
  const Eigen::MatrixXd* common = nullptr;
  const Eigen::MatrixXd* specific = nullptr;
  Eigen::MatrixXd own_common;
  Eigen::MatrixXd own_specific;
};

void bind_rows(const DesignBlocks& blocks, const ModelParams& params, Rows& rows) {
  if (blocks.has_scales(params.phi, params.psi)) {
    rows.common = &blocks.common_rows();
    rows.specific = &blocks.specific_rows();
    return;
  }
  rows.own_common = correlation_rows(blocks.lags(), params.phi);
  rows.own_specific = correlation_rows(blocks.lags(), params.psi);
  rows.common = &rows.own_common;
  rows.specific = &rows.own_specific;
}

}  // namespace

PairLagArray residuals(const DesignBlocks& blocks, const ModelParams& params) {
  check_dims(blocks, params);
  Rows rows;
  bind_rows(blocks, params, rows);
  const auto& R = *rows.common;
  const auto& C = *rows.specific;
  const std::size_t p = blocks.types();
  const std::size_t L = blocks.lag_count();
  const auto q = params.alpha.cols();
  PairLagArray res(p, L);
  std::vector<double> terms(static_cast<std::size_t>(q));
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t k = 0; k < L; ++k) {
        const double sw = blocks.sqrt_weight(i, j, k);
        if (sw == 0.0) {
          res(i, j, k) = blocks.response(i, j, k);
          continue;
        }
        const auto kk = static_cast<Eigen::Index>(k);
        for (Eigen::Index l = 0; l < q; ++l) {
          terms[l] = R(kk, l) * params.alpha(i, l) * params.alpha(j, l);
        }
        double fit = detail::order_free_sum(terms);
        if (i == j) fit += params.sigma2[i] * C(kk, static_cast<Eigen::Index>(i));
        res(i, j, k) = blocks.response(i, j, k) - sw * fit;
      }
    }
  }
  return res;
}

double objective_q(const DesignBlocks& blocks, const ModelParams& params) {
  const auto res = residuals(blocks, params);
  double q = 0.0;
  for (double r : res.values()) q += r * r;
  return q;
}

double objective_q_lambda(const DesignBlocks& blocks, const ModelParams& params,
                          const Penalty& penalty) {
  return objective_q(blocks, params) + penalty.value(params.alpha);
}

ObjectiveGradient objective_gradient(const DesignBlocks& blocks, const ModelParams& params) {
  const auto res = residuals(blocks, params);
  Rows rows;
  bind_rows(blocks, params, rows);
  const auto& R = *rows.common;
  const auto& C = *rows.specific;
  const Eigen::MatrixXd dR = correlation_rows_dlog(blocks.lags(), params.phi);
  const Eigen::MatrixXd dC = correlation_rows_dlog(blocks.lags(), params.psi);
  const std::size_t p = blocks.types();
  const std::size_t L = blocks.lag_count();
  const auto q = params.alpha.cols();
  const auto& A = params.alpha;

  ObjectiveGradient g;
  g.alpha = Eigen::MatrixXd::Zero(A.rows(), q);
  g.sigma2 = Eigen::VectorXd::Zero(params.sigma2.size());
  g.log_phi = Eigen::VectorXd::Zero(q);
  g.log_psi = Eigen::VectorXd::Zero(params.psi.size());

  // S(l) = sum_k res_ijk sw_ijk R_kl and the same with dR; both p x p.
  for (Eigen::Index l = 0; l < q; ++l) {
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(p, p);
    Eigen::MatrixXd dS = Eigen::MatrixXd::Zero(p, p);
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j < p; ++j) {
        double s = 0.0;
        double ds = 0.0;
        for (std::size_t k = 0; k < L; ++k) {
          const double rw = res(i, j, k) * blocks.sqrt_weight(i, j, k);
          s += rw * R(static_cast<Eigen::Index>(k), l);
          ds += rw * dR(static_cast<Eigen::Index>(k), l);
        }
        S(i, j) = s;
        dS(i, j) = ds;
      }
    }
    const Eigen::VectorXd a = A.col(l);
    g.alpha.col(l) = -2.0 * (S * a + S.transpose() * a);
    g.log_phi[l] = -2.0 * a.dot(dS * a);
  }
  for (std::size_t i = 0; i < p; ++i) {
    double s = 0.0;
    double ds = 0.0;
    const auto ii = static_cast<Eigen::Index>(i);
    for (std::size_t k = 0; k < L; ++k) {
      const double rw = res(i, i, k) * blocks.sqrt_weight(i, i, k);
      s += rw * C(static_cast<Eigen::Index>(k), ii);
      ds += rw * dC(static_cast<Eigen::Index>(k), ii);
    }
    g.sigma2[ii] = -2.0 * s;
    g.log_psi[ii] = -2.0 * params.sigma2[ii] * ds;
  }
  return g;
}

}  // namespace mlgcp
