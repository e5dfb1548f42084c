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
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mlgcp/model.hpp"
#include "mlgcp/pattern.hpp"

namespace mlgcp {

/// Realization of a scalar field on an nx x ny grid of cells covering the
/// window; values are stored row by row (x fastest) at the cell centers.
struct GridField {
  Window window;
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::vector<double> values;

  double cell_width() const { return window.width() / static_cast<double>(nx); }
  double cell_height() const { return window.height() / static_cast<double>(ny); }
  double at(std::size_t ix, std::size_t iy) const { return values[iy * nx + ix]; }
};

/// Zero-mean, unit-variance stationary Gaussian field with correlation
/// exp(-t / scale) between cell centers. Uses circulant embedding on a
/// torus of at least twice the grid, doubling the padding while the
/// embedding has clearly negative eigenvalues; grids of at most 256 cells
/// use a dense Cholesky factor instead. Throws NumericalError if no
/// admissible embedding is found.
GridField sample_gaussian_field(const Window& window, std::size_t nx, std::size_t ny,
                                double scale, std::uint64_t seed);

struct SimScenario {
  Window window;
  ModelParams truth;
  Eigen::VectorXd trend;            // m_i
  Eigen::VectorXd expected_counts;  // rho_i |W|
  std::size_t resolution = 256;     // cells per axis
  std::uint64_t seed = 1;

  void validate() const;
};

/// Scenario with m_i = log(count_i / |W|) - |alpha_i.|^2 / 2 - sigma2_i / 2.
SimScenario make_scenario(const ModelParams& truth, const Window& window,
                          const Eigen::VectorXd& expected_counts, std::size_t resolution = 256,
                          std::uint64_t seed = 1);

/// Five types, two common fields, 1000 expected points per type.
SimScenario scenario_p5();
/// Ten types, four common fields with 40% zero loadings, 1000 expected points per type.
SimScenario scenario_p10();

struct SimStats {
  std::size_t capped_cells = 0;  // cells whose intensity hit the 1e12 cap
};

/// Draws the latent fields, then a Poisson count per grid cell with mean
/// exp(Z_i) * cell area, placing the points uniformly within the cell.
MultiPointPattern sample_mlgcp(const SimScenario& scenario, SimStats* stats = nullptr);

/// JSON: {"window": {...}, "params": {...}, "trend": [...],
///        "expected_counts": [...], "resolution": n, "seed": s}
std::string scenario_to_json(const SimScenario& scenario, int indent = 2);
SimScenario scenario_from_json(std::string_view text);
SimScenario read_scenario(const std::filesystem::path& path);

}  // namespace mlgcp
