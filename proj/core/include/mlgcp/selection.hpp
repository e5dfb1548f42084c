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
#include <iosfwd>
#include <span>
#include <vector>

#include "mlgcp/design.hpp"
#include "mlgcp/optimizer.hpp"
#include "mlgcp/pcf.hpp"

namespace mlgcp {

/// Off-diagonal index triple with i < j (zero-based).
struct Triple {
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t k = 0;

  bool operator==(const Triple&) const = default;
};

/// Partition of all i < j triples into K folds. Triples are arranged
/// lexicographically and cut into consecutive blocks of length b (the last
/// block may be shorter); whole blocks are dealt to folds at random.
struct FoldAssignment {
  std::size_t types = 0;
  std::size_t lags = 0;
  std::size_t block_length = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<Triple>> folds;

  std::size_t size() const { return folds.size(); }
};

/// Throws InputError when K < 2, b < 1 or there are fewer blocks than folds.
FoldAssignment make_folds(std::size_t p, std::size_t L, std::size_t K, std::size_t b,
                          std::uint64_t seed);

/// Copy of `weights` with every held-out triple and its mirror (j, i, k)
/// set to zero.
PairLagArray held_out_weights(const PairLagArray& weights, std::span<const Triple> fold);

/// Squared residuals of the full-data design at `params`, summed over `fold`.
double held_out_error(const DesignBlocks& full, const ModelParams& params,
                      std::span<const Triple> fold);

struct CvScore {
  double cv = 0.0;
  std::vector<double> fold_scores;
  std::vector<bool> fold_converged;
};

/// K-fold CV score of one (q, penalty) cell. Each fold is fitted from
/// `init`, or from default_init(p, q, window, config.seed) when init is null.
CvScore cv_score(const PcfEstimate& est, const PairLagArray& weights, std::size_t q,
                 const Penalty& penalty, const FoldAssignment& folds, const FitConfig& config,
                 const ModelParams* init = nullptr);

/// sqrt(sum_c (CV_c - mean)^2 / ((K - 1) K)); 0 for fewer than two folds.
double standard_error(std::span<const double> fold_scores);

struct CvCell {
  std::size_t q = 0;
  double lambda = 0.0;
  double cv = 0.0;
  double se = 0.0;
  std::vector<double> fold_scores;
  std::size_t converged_folds = 0;
  std::size_t q_eff = 0;  // from the full-data fit at this cell
  ModelParams params;     // full-data estimate (empty without full_fit)
};

struct CvGrid {
  double xi = 1.0;
  std::vector<std::size_t> q_values;
  std::vector<double> lambdas;  // ascending
  std::size_t folds = 0;
  std::vector<CvCell> cells;  // q-major: cells[qi * lambdas.size() + li]

  const CvCell& at(std::size_t qi, std::size_t li) const {
    return cells[qi * lambdas.size() + li];
  }
};

struct CvGridOptions {
  FitConfig fit;
  std::size_t threads = 1;
  /// Warm-start along the lambda path within each (q, fold); cold-start each
  /// cell from the default initial value otherwise.
  bool warm_start = true;
  /// Fit the full data at every cell to report q_eff.
  bool full_fit = true;
};

/// Evaluates CV(lambda, q) on the whole grid. Every (q, fold) pair and every
/// full-data fit is an independent task; results are keyed by cell.
CvGrid evaluate_cv_grid(const PcfEstimate& est, const PairLagArray& weights,
                        std::span<const std::size_t> q_values, std::span<const double> lambdas,
                        double xi, const FoldAssignment& folds, const CvGridOptions& options);

struct CvSelection {
  std::size_t q = 0;
  double lambda = 0.0;
  std::size_t cell = 0;  // index into CvGrid::cells
};

/// Argmin of CV; ties go to smaller q, then larger lambda.
CvSelection select_min(const CvGrid& grid);

/// Smallest q, then largest lambda, with CV <= CV_min + SE_min, where SE_min
/// is the standard error of the Min cell.
CvSelection select_one_se(const CvGrid& grid);

/// {0} followed by 19 log-equispaced values from 1e-3 to 5.
std::vector<double> default_lambda_grid();

/// {0, 1, ..., min(p, 10)}.
std::vector<std::size_t> default_q_grid(std::size_t p);

/// Rows `xi,q,lambda,cv,se,q_eff,converged_folds` for every cell of every grid.
void write_cv_csv(std::ostream& out, std::span<const CvGrid> grids);

}  // namespace mlgcp
