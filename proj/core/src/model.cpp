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

#include "mlgcp/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlgcp/error.hpp"
#include "ordered_sum.hpp"

namespace mlgcp {

double Window::diameter() const { return std::hypot(width(), height()); }

double Window::relative_scale() const { return diameter() / std::sqrt(2.0); }

void Window::validate() const {
  if (!(xmax > xmin) || !(ymax > ymin)) {
    throw InputError("window must satisfy xmax > xmin and ymax > ymin");
  }
}

double exp_correlation(double t, double scale) {
  if (!(scale > 0.0)) throw std::domain_error("correlation scale must be positive");
  if (t < 0.0) throw std::domain_error("correlation lag must be non-negative");
  return std::exp(-t / scale);
}

double correlation(double t, double scale) { return std::exp(-t / scale); }

double correlation_dlog_scale(double t, double scale) {
  const double u = t / scale;
  return std::exp(-u) * u;
}

void ModelParams::validate() const {
  const auto p = sigma2.size();
  const auto q = phi.size();
  if (psi.size() != p) throw InputError("psi must have one entry per type");
  if (alpha.rows() != p || alpha.cols() != q) {
    throw InputError("alpha must be p x q (p = " + std::to_string(p) +
                     ", q = " + std::to_string(q) + ")");
  }
  if (p == 0) throw InputError("model needs at least one type");
  if (!alpha.allFinite()) throw InputError("alpha has non-finite entries");
  for (Eigen::Index i = 0; i < p; ++i) {
    if (!(sigma2[i] >= 0.0) || !std::isfinite(sigma2[i])) {
      throw InputError("sigma2 entries must be finite and >= 0");
    }
    if (!(psi[i] > 0.0) || !std::isfinite(psi[i])) {
      throw InputError("psi entries must be finite and > 0");
    }
  }
  for (Eigen::Index l = 0; l < q; ++l) {
    if (!(phi[l] > 0.0) || !std::isfinite(phi[l])) {
      throw InputError("phi entries must be finite and > 0");
    }
  }
}

namespace {

void check_type(const ModelParams& params, std::size_t i) {
  if (i >= params.types()) {
    throw std::out_of_range("type index " + std::to_string(i) + " out of range");
  }
}

}  // namespace

Eigen::VectorXd beta_vector(const ModelParams& params, std::size_t i, std::size_t j) {
  check_type(params, i);
  check_type(params, j);
  const auto q = static_cast<Eigen::Index>(params.factors());
  const auto ri = static_cast<Eigen::Index>(i);
  const auto rj = static_cast<Eigen::Index>(j);
  if (i != j) {
    return params.alpha.row(ri).cwiseProduct(params.alpha.row(rj)).transpose();
  }
  Eigen::VectorXd beta(q + 1);
  beta.head(q) = params.alpha.row(ri).array().square().transpose();
  beta[q] = params.sigma2[ri];
  return beta;
}

double cross_pcf(const ModelParams& params, std::size_t i, std::size_t j, double t) {
  check_type(params, i);
  check_type(params, j);
  std::vector<double> terms(params.factors());
  for (Eigen::Index l = 0; l < params.alpha.cols(); ++l) {
    terms[l] = params.alpha(i, l) * params.alpha(j, l) * correlation(t, params.phi[l]);
  }
  double log_g = detail::order_free_sum(terms);
  if (i == j) log_g += params.sigma2[i] * correlation(t, params.psi[i]);
  return std::exp(log_g);
}

double proportion_of_variance(const ModelParams& params, std::size_t i, double t) {
  check_type(params, i);
  std::vector<double> terms(params.factors());
  for (Eigen::Index l = 0; l < params.alpha.cols(); ++l) {
    terms[l] = params.alpha(i, l) * params.alpha(i, l) * correlation(t, params.phi[l]);
  }
  const double common = detail::order_free_sum(terms);
  const double total = common + params.sigma2[i] * correlation(t, params.psi[i]);
  if (!(total > 0.0)) {
    throw NumericalError("proportion of variance undefined for type " + std::to_string(i));
  }
  return common / total;
}

LatentCovariances latent_covariances(const ModelParams& params) {
  const auto p = params.alpha.rows();
  const auto q = params.alpha.cols();
  LatentCovariances cov;
  cov.common = Eigen::MatrixXd::Zero(p, p);
  std::vector<double> terms(static_cast<std::size_t>(q));
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = i; j < p; ++j) {
      for (Eigen::Index l = 0; l < q; ++l) terms[l] = params.alpha(i, l) * params.alpha(j, l);
      const double c = detail::order_free_sum(terms);
      cov.common(i, j) = c;
      cov.common(j, i) = c;
    }
  }
  cov.total = cov.common;
  cov.total.diagonal() += params.sigma2;
  return cov;
}

Eigen::MatrixXd row_distance_matrix(const ModelParams& params) {
  const auto p = params.alpha.rows();
  const auto q = params.alpha.cols();
  Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(p, p);
  std::vector<double> terms(static_cast<std::size_t>(q));
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = i + 1; j < p; ++j) {
      for (Eigen::Index l = 0; l < q; ++l) {
        const double diff = params.alpha(i, l) - params.alpha(j, l);
        terms[l] = diff * diff;
      }
      const double d = std::sqrt(detail::order_free_sum(terms));
      dist(i, j) = d;
      dist(j, i) = d;
    }
  }
  return dist;
}

std::size_t q_eff(const Eigen::MatrixXd& alpha, double tol) {
  std::size_t count = 0;
  for (Eigen::Index l = 0; l < alpha.cols(); ++l) {
    if (alpha.rows() > 0 && alpha.col(l).cwiseAbs().maxCoeff() > tol) ++count;
  }
  return count;
}

}  // namespace mlgcp
