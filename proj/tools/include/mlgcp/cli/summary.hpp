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
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mlgcp/model.hpp"

namespace mlgcp::cli {

/// One agglomeration step. Leaves are clusters 0..p-1; the cluster formed
/// at step s gets id p + s.
struct MergeStep {
  std::size_t left = 0;
  std::size_t right = 0;
  double height = 0.0;
  std::size_t size = 0;
};

/// Average-linkage agglomerative clustering of a symmetric distance matrix.
/// Ties merge the pair with the smallest (left, right) ids.
std::vector<MergeStep> average_linkage(const Eigen::MatrixXd& dist);

/// Correlation matrix of a covariance; entries involving a zero-variance
/// coordinate are 0.
Eigen::MatrixXd covariance_to_correlation(const Eigen::MatrixXd& cov);

struct Histogram {
  std::vector<double> edges;
  std::vector<std::size_t> counts;  // bins [e_k, e_{k+1}), the last one closed
};

/// Breakpoints -1, -0.5, -0.2, 0, 0.2, 0.5, 1.
std::vector<double> correlation_bin_edges();

/// Histogram of the strictly upper-triangular entries of `corr`.
Histogram correlation_histogram(const Eigen::MatrixXd& corr);

/// JSON bundle: PV per type at each lag, common/total covariances and
/// correlations, row distances, average-linkage merge tree, q_eff and
/// correlation histograms.
std::string summarize_json(const ModelParams& params, std::span<const double> lags,
                           int indent = 2);

}  // namespace mlgcp::cli
