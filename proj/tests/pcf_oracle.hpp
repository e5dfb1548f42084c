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
#include <numbers>
#include <random>
#include <vector>

#include "mlgcp/pattern.hpp"

namespace mlgcp::testing {

inline MultiPointPattern random_pattern(std::mt19937_64& rng, std::size_t types,
                                        std::size_t max_points) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> n(1, max_points);
  MultiPointPattern pat;
  pat.points.resize(types);
  for (std::size_t i = 0; i < types; ++i) {
    pat.labels.push_back(std::to_string(i + 1));
    const auto count = n(rng);
    for (std::size_t m = 0; m < count; ++m) pat.points[i].push_back({u(rng), u(rng)});
  }
  return pat;
}

inline std::vector<double> oracle_lags() {
  std::vector<double> lags;
  for (int k = 1; k <= 12; ++k) lags.push_back(0.05 * k);
  return lags;
}

// Direct evaluation of the translation-corrected kernel estimator over all
// ordered pairs, unit window, intensities n_i.
inline std::vector<double> naive_pcf(const MultiPointPattern& pat, const std::vector<double>& lags,
                                     double b) {
  const std::size_t p = pat.types();
  std::vector<double> out(p * p * lags.size(), 0.0);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      const double rho_i = static_cast<double>(pat.points[i].size());
      const double rho_j = static_cast<double>(pat.points[j].size());
      for (std::size_t k = 0; k < lags.size(); ++k) {
        double s = 0.0;
        for (std::size_t a = 0; a < pat.points[i].size(); ++a) {
          for (std::size_t c = 0; c < pat.points[j].size(); ++c) {
            if (i == j && a == c) continue;
            const double dx = pat.points[i][a].x - pat.points[j][c].x;
            const double dy = pat.points[i][a].y - pat.points[j][c].y;
            const double d = std::hypot(dx, dy);
            if (std::abs(lags[k] - d) > b) continue;
            const double area = (1.0 - std::abs(dx)) * (1.0 - std::abs(dy));
            s += (1.0 / (2.0 * b)) / (rho_i * rho_j * area);
          }
        }
        out[(i * p + j) * lags.size() + k] = s / (2.0 * std::numbers::pi * lags[k]);
      }
    }
  }
  return out;
}

}  // namespace mlgcp::testing
