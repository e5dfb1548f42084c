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
#include <filesystem>
#include <iosfwd>
#include <span>
#include <variant>
#include <vector>

#include "mlgcp/model.hpp"
#include "mlgcp/pattern.hpp"

namespace mlgcp {

/// Dense p x p x L array indexed by (type i, type j, lag k), zero-based.
class PairLagArray {
 public:
  PairLagArray() = default;
  PairLagArray(std::size_t types, std::size_t lags, double fill = 0.0)
      : types_(types), lags_(lags), values_(types * types * lags, fill) {}

  std::size_t types() const { return types_; }
  std::size_t lags() const { return lags_; }

  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return values_[(i * types_ + j) * lags_ + k];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return values_[(i * types_ + j) * lags_ + k];
  }
  std::span<const double> pair(std::size_t i, std::size_t j) const {
    return {values_.data() + (i * types_ + j) * lags_, lags_};
  }
  std::span<double> pair(std::size_t i, std::size_t j) {
    return {values_.data() + (i * types_ + j) * lags_, lags_};
  }
  std::span<const double> values() const { return values_; }

  /// True when (i, j, k) and (j, i, k) hold identical values everywhere.
  bool symmetric() const;

 private:
  std::size_t types_ = 0;
  std::size_t lags_ = 0;
  std::vector<double> values_;
};

/// Intensity rho(u) > 0 per unit area: a constant, or a piecewise-constant
/// grid over the window (nx * ny values, row-major with x fastest).
class IntensitySurface {
 public:
  static IntensitySurface constant(double value);
  static IntensitySurface grid(const Window& window, std::size_t nx, std::size_t ny,
                               std::vector<double> values);

  double operator()(double x, double y) const;
  bool is_constant() const { return std::holds_alternative<double>(rule_); }

 private:
  struct Grid {
    Window window;
    std::size_t nx = 0;
    std::size_t ny = 0;
    std::vector<double> values;
  };
  std::variant<double, Grid> rule_ = 1.0;
};

/// n_i / |W| for type i (zero-based). Throws InputError for an empty type.
IntensitySurface constant_intensity(const MultiPointPattern& pattern, std::size_t i);

/// |W intersect (W + h)| for the rectangular window.
double translation_overlap(const Window& window, double hx, double hy);

/// L equispaced lags on [0.025, 0.25] scaled by the window's relative scale.
std::vector<double> default_lag_grid(const Window& window, std::size_t count = 25);
/// Kernel bandwidth 0.005 scaled by the window's relative scale.
double default_bandwidth(const Window& window);

struct PcfEstimate {
  Window window;
  std::vector<double> lags;  // strictly increasing, positive
  PairLagArray ghat;         // p x p x L, symmetric in (i, j)
  double bandwidth = 0.0;    // 0 when unknown (e.g. read back from CSV)
  std::size_t skipped_pairs = 0;  // pairs dropped because |W ∩ W_{u-v}| = 0

  std::size_t types() const { return ghat.types(); }
};

/// Kernel estimate of all cross pair correlation functions with translation
/// edge correction and a uniform kernel of half-width `bandwidth`. Pairs are
/// enumerated through a uniform grid index with cells at least
/// max(lags) + bandwidth wide; (i, j) blocks are evaluated in parallel.
PcfEstimate estimate_pcf(const MultiPointPattern& pattern,
                         std::span<const IntensitySurface> intensities,
                         std::span<const double> lags, double bandwidth,
                         std::size_t threads = 1);

/// Convenience overload using constant intensities and the default lag grid
/// and bandwidth for the pattern's window.
PcfEstimate estimate_pcf(const MultiPointPattern& pattern, std::size_t threads = 1);

struct LogResponse {
  PairLagArray response;  // sqrt(w) * log(ghat)
  PairLagArray weights;   // effective weights; zero wherever ghat <= 0
};

/// Weighted log responses. Entries with ghat <= 0 (or non-finite) get value
/// 0 and weight 0.
LogResponse log_pcf_response(const PcfEstimate& est, const PairLagArray& weights);

/// w_ijk = ghat_ij(t_k) / 2 off the diagonal and ghat_ii(t_k) on it;
/// non-positive ghat gives weight 0.
PairLagArray default_weights(const PcfEstimate& est);

/// Noiseless "estimate" equal to the model's cross pair correlations.
PcfEstimate theoretical_pcf(const ModelParams& params, const Window& window,
                            std::span<const double> lags);

/// CSV with header `i,j,lag,ghat,weight` (1-based type indices).
void write_pcf_csv(std::ostream& out, const PcfEstimate& est, const PairLagArray& weights);

struct PcfTable {
  PcfEstimate estimate;
  PairLagArray weights;
};

PcfTable read_pcf_csv(std::istream& in, const Window& window);
PcfTable read_pcf_csv(const std::filesystem::path& path, const Window& window);

}  // namespace mlgcp
