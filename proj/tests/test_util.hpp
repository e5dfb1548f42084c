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
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mlgcp/design.hpp"
#include "mlgcp/model.hpp"
#include "mlgcp/pcf.hpp"

namespace mlgcp::testing {

inline ModelParams random_params(std::size_t p, std::size_t q, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 0.7);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  ModelParams params;
  params.alpha.resize(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
  for (Eigen::Index i = 0; i < params.alpha.rows(); ++i) {
    for (Eigen::Index l = 0; l < params.alpha.cols(); ++l) params.alpha(i, l) = normal(rng);
  }
  params.sigma2.resize(static_cast<Eigen::Index>(p));
  params.psi.resize(static_cast<Eigen::Index>(p));
  params.phi.resize(static_cast<Eigen::Index>(q));
  for (Eigen::Index i = 0; i < params.sigma2.size(); ++i) {
    params.sigma2[i] = 0.2 + 1.3 * unif(rng);
    params.psi[i] = 0.01 + 0.09 * unif(rng);
  }
  for (Eigen::Index l = 0; l < params.phi.size(); ++l) params.phi[l] = 0.01 + 0.14 * unif(rng);
  return params;
}

/// Cross pcfs of `params` on the default lag grid, multiplied by
/// exp(noise * N(0, 1)) symmetrically in (i, j).
inline PcfEstimate noisy_pcf(const ModelParams& params, double noise, std::mt19937_64& rng) {
  const Window window;
  const auto lags = default_lag_grid(window);
  PcfEstimate est = theoretical_pcf(params, window, lags);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t p = est.types();
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i; j < p; ++j) {
      for (std::size_t k = 0; k < lags.size(); ++k) {
        const double v = est.ghat(i, j, k) * std::exp(noise * normal(rng));
        est.ghat(i, j, k) = v;
        est.ghat(j, i, k) = v;
      }
    }
  }
  return est;
}

struct Instance {
  ModelParams truth;
  PcfEstimate est;
  PairLagArray weights;
  DesignBlocks blocks;
};

inline Instance make_instance(std::size_t p, std::size_t q, double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Instance inst;
  inst.truth = random_params(p, q, rng);
  inst.est = noisy_pcf(inst.truth, noise, rng);
  inst.weights = default_weights(inst.est);
  inst.blocks = DesignBlocks(inst.est, inst.weights);
  return inst;
}

/// Golden-section minimum of a unimodal f on [a, b].
template <typename T, typename F>
T golden_section(F f, T a, T b, T tol) {
  const T inv_phi = (std::sqrt(T(5)) - T(1)) / T(2);
  T c = b - inv_phi * (b - a);
  T d = a + inv_phi * (b - a);
  auto fc = f(c);
  auto fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return (a + b) / T(2);
}

}  // namespace mlgcp::testing
