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

#include "mlgcp/cli/summary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"
#include "mlgcp/error.hpp"

namespace mlgcp::cli {

std::vector<MergeStep> average_linkage(const Eigen::MatrixXd& dist) {
  const auto p = static_cast<std::size_t>(dist.rows());
  if (dist.cols() != dist.rows()) throw InputError("distance matrix must be square");
  // Cluster-to-cluster average distances, indexed by cluster id.
  const std::size_t total = p == 0 ? 0 : 2 * p - 1;
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(total),
                                            static_cast<Eigen::Index>(total));
  d.topLeftCorner(dist.rows(), dist.cols()) = dist;
  std::vector<std::size_t> size(total, 1);
  std::vector<bool> active(total, false);
  for (std::size_t i = 0; i < p; ++i) active[i] = true;

  std::vector<MergeStep> steps;
  for (std::size_t s = 0; s + 1 < p; ++s) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t a = 0;
    std::size_t b = 0;
    for (std::size_t i = 0; i < p + s; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < p + s; ++j) {
        if (!active[j]) continue;
        const double v = d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (v < best) {
          best = v;
          a = i;
          b = j;
        }
      }
    }
    const std::size_t id = p + s;
    size[id] = size[a] + size[b];
    active[a] = false;
    active[b] = false;
    for (std::size_t k = 0; k < id; ++k) {
      if (!active[k]) continue;
      const auto ik = static_cast<Eigen::Index>(k);
      const double v = (static_cast<double>(size[a]) * d(static_cast<Eigen::Index>(a), ik) +
                        static_cast<double>(size[b]) * d(static_cast<Eigen::Index>(b), ik)) /
                       static_cast<double>(size[id]);
      d(static_cast<Eigen::Index>(id), ik) = v;
      d(ik, static_cast<Eigen::Index>(id)) = v;
    }
    active[id] = true;
    steps.push_back({a, b, best, size[id]});
  }
  return steps;
}

Eigen::MatrixXd covariance_to_correlation(const Eigen::MatrixXd& cov) {
  const auto p = cov.rows();
  Eigen::MatrixXd corr = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      const double v = cov(i, i) * cov(j, j);
      if (v > 0.0) corr(i, j) = cov(i, j) / std::sqrt(v);
    }
  }
  return corr;
}

std::vector<double> correlation_bin_edges() { return {-1.0, -0.5, -0.2, 0.0, 0.2, 0.5, 1.0}; }

Histogram correlation_histogram(const Eigen::MatrixXd& corr) {
  Histogram h;
  h.edges = correlation_bin_edges();
  h.counts.assign(h.edges.size() - 1, 0);
  for (Eigen::Index i = 0; i < corr.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < corr.cols(); ++j) {
      const double v = std::clamp(corr(i, j), -1.0, 1.0);
      std::size_t bin = h.counts.size() - 1;
      for (std::size_t k = 0; k + 1 < h.edges.size(); ++k) {
        if (v < h.edges[k + 1]) {
          bin = k;
          break;
        }
      }
      ++h.counts[bin];
    }
  }
  return h;
}

namespace {

using nlohmann::json;

json matrix_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

json histogram_json(const Histogram& h) {
  return {{"edges", h.edges}, {"counts", h.counts}};
}

}  // namespace

std::string summarize_json(const ModelParams& params, std::span<const double> lags, int indent) {
  params.validate();
  const auto p = params.types();
  json doc;

  json pv = json::array();
  for (double t : lags) {
    if (!(t >= 0.0)) throw InputError("summary lags must be >= 0");
    json row = {{"lag", t}};
    json values = json::array();
    for (std::size_t i = 0; i < p; ++i) {
      try {
        values.push_back(proportion_of_variance(params, i, t));
      } catch (const NumericalError&) {
        values.push_back(nullptr);
      }
    }
    row["pv"] = std::move(values);
    pv.push_back(std::move(row));
  }
  doc["proportion_of_variance"] = std::move(pv);

  const auto cov = latent_covariances(params);
  const Eigen::MatrixXd corr_common = covariance_to_correlation(cov.common);
  const Eigen::MatrixXd corr_total = covariance_to_correlation(cov.total);
  doc["common_covariance"] = matrix_json(cov.common);
  doc["total_covariance"] = matrix_json(cov.total);
  doc["common_correlation"] = matrix_json(corr_common);
  doc["total_correlation"] = matrix_json(corr_total);

  const Eigen::MatrixXd dist = row_distance_matrix(params);
  doc["row_distances"] = matrix_json(dist);
  json tree = json::array();
  for (const auto& s : average_linkage(dist)) {
    tree.push_back({{"left", s.left}, {"right", s.right}, {"height", s.height}, {"size", s.size}});
  }
  doc["merge_tree"] = {{"linkage", "average"}, {"steps", std::move(tree)}};
  doc["q_eff"] = q_eff(params.alpha);
  doc["correlation_histograms"] = {{"common", histogram_json(correlation_histogram(corr_common))},
                                   {"total", histogram_json(correlation_histogram(corr_total))}};
  return doc.dump(indent);
}

}  // namespace mlgcp::cli
