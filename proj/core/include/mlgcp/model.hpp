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

#include <Eigen/Dense>

namespace mlgcp {

/// Axis-aligned rectangular observation window.
struct Window {
  double xmin = 0.0;
  double xmax = 1.0;
  double ymin = 0.0;
  double ymax = 1.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double area() const { return width() * height(); }
  double diameter() const;
  /// Length scale relative to the unit square (diameter / sqrt(2)).
  double relative_scale() const;
  bool contains(double x, double y) const {
    return x >= xmin && x <= xmax && y >= ymin && y <= ymax;
  }
  /// Throws InputError unless xmax > xmin and ymax > ymin.
  void validate() const;
};

/// Correlation as a function of lag t and scale. Every model component
/// evaluates correlations through these two functions; the exponential
/// family exp(-t / scale) is the one implemented.
double correlation(double t, double scale);
/// Derivative of correlation(t, scale) with respect to log(scale).
double correlation_dlog_scale(double t, double scale);

/// exp(-t / scale). Throws std::domain_error for scale <= 0 or t < 0.
double exp_correlation(double t, double scale);

/// Full parameter state of the latent factor model.
///
/// alpha is p x q (loadings of the p types on the q common fields),
/// sigma2 and psi have length p (type-specific variance and scale), phi has
/// length q (common-field scales). q = 0 is a p x 0 alpha and empty phi.
struct ModelParams {
  Eigen::MatrixXd alpha;
  Eigen::VectorXd sigma2;
  Eigen::VectorXd phi;
  Eigen::VectorXd psi;

  std::size_t types() const { return static_cast<std::size_t>(sigma2.size()); }
  std::size_t factors() const { return static_cast<std::size_t>(phi.size()); }

  /// Checks shapes and the sign constraints (sigma2 >= 0, scales > 0,
  /// finite alpha). Throws InputError.
  void validate() const;
};

/// Coefficients multiplying the design row of pair (i, j), zero-based.
/// Off-diagonal: alpha_il * alpha_jl. Diagonal: alpha_il^2 with sigma2_i
/// appended.
Eigen::VectorXd beta_vector(const ModelParams& params, std::size_t i, std::size_t j);

/// Theoretical cross pair correlation g_ij(t).
double cross_pcf(const ModelParams& params, std::size_t i, std::size_t j, double t);

/// Share of the latent covariance of type i at lag t due to the common
/// fields. Throws NumericalError when the total covariance is zero.
double proportion_of_variance(const ModelParams& params, std::size_t i, double t);

struct LatentCovariances {
  Eigen::MatrixXd common;  // alpha alpha^T
  Eigen::MatrixXd total;   // alpha alpha^T + diag(sigma2)
};

LatentCovariances latent_covariances(const ModelParams& params);

/// Euclidean distances between rows of alpha.
Eigen::MatrixXd row_distance_matrix(const ModelParams& params);

/// Number of alpha columns with some |entry| > tol.
std::size_t q_eff(const Eigen::MatrixXd& alpha, double tol = 1e-10);

}  // namespace mlgcp
