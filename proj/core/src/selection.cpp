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

#include "mlgcp/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "mlgcp/error.hpp"
#include "mlgcp/parallel.hpp"

namespace mlgcp {

FoldAssignment make_folds(std::size_t p, std::size_t L, std::size_t K, std::size_t b,
                          std::uint64_t seed) {
  if (K < 2) throw InputError("need at least two folds");
  if (b < 1) throw InputError("block length must be >= 1");
  std::vector<Triple> triples;
  triples.reserve(p * (p > 0 ? p - 1 : 0) / 2 * L);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i + 1; j < p; ++j) {
      for (std::size_t k = 0; k < L; ++k) triples.push_back({i, j, k});
    }
  }
  const std::size_t blocks = (triples.size() + b - 1) / b;
  if (blocks < K) {
    throw InputError("only " + std::to_string(blocks) + " blocks of off-diagonal triples for " +
                     std::to_string(K) + " folds");
  }
  // Shuffle the blocks, then deal them round-robin: the assignment is random
  // and no fold is left empty.
  std::vector<std::size_t> order(blocks);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> fold_of(blocks);
  for (std::size_t r = 0; r < blocks; ++r) fold_of[order[r]] = r % K;

  FoldAssignment out;
  out.types = p;
  out.lags = L;
  out.block_length = b;
  out.seed = seed;
  out.folds.resize(K);
  for (std::size_t t = 0; t < triples.size(); ++t) out.folds[fold_of[t / b]].push_back(triples[t]);
  return out;
}

PairLagArray held_out_weights(const PairLagArray& weights, std::span<const Triple> fold) {
  PairLagArray out = weights;
  for (const auto& t : fold) {
    if (t.i >= weights.types() || t.j >= weights.types() || t.k >= weights.lags()) {
      throw InputError("held-out triple outside the weight array");
    }
    out(t.i, t.j, t.k) = 0.0;
    out(t.j, t.i, t.k) = 0.0;
  }
  return out;
}

double held_out_error(const DesignBlocks& full, const ModelParams& params,
                      std::span<const Triple> fold) {
  const auto res = residuals(full, params);
  double s = 0.0;
  for (const auto& t : fold) s += res(t.i, t.j, t.k) * res(t.i, t.j, t.k);
  return s;
}

namespace {

void check_folds(const PcfEstimate& est, const FoldAssignment& folds) {
  if (folds.types != est.types() || folds.lags != est.lags.size()) {
    throw InputError("fold assignment does not match the estimate's dimensions");
  }
}

}  // namespace

CvScore cv_score(const PcfEstimate& est, const PairLagArray& weights, std::size_t q,
                 const Penalty& penalty, const FoldAssignment& folds, const FitConfig& config,
                 const ModelParams* init) {
  check_folds(est, folds);
  const ModelParams start =
      init ? *init : default_init(est.types(), q, est.window, config.seed);
  if (start.factors() != q) throw InputError("initial value has the wrong q");
  const DesignBlocks full(est, weights);
  CvScore out;
  for (const auto& fold : folds.folds) {
    const DesignBlocks train(est, held_out_weights(weights, fold));
    const auto res = fit(train, start, penalty, config);
    out.fold_scores.push_back(held_out_error(full, res.params, fold));
    out.fold_converged.push_back(res.converged);
  }
  out.cv = std::accumulate(out.fold_scores.begin(), out.fold_scores.end(), 0.0) /
           static_cast<double>(out.fold_scores.size());
  return out;
}

double standard_error(std::span<const double> fold_scores) {
  const auto K = fold_scores.size();
  if (K < 2) return 0.0;
  const double mean =
      std::accumulate(fold_scores.begin(), fold_scores.end(), 0.0) / static_cast<double>(K);
  double ss = 0.0;
  for (double c : fold_scores) ss += (c - mean) * (c - mean);
  return std::sqrt(ss / (static_cast<double>(K - 1) * static_cast<double>(K)));
}

CvGrid evaluate_cv_grid(const PcfEstimate& est, const PairLagArray& weights,
                        std::span<const std::size_t> q_values, std::span<const double> lambdas,
                        double xi, const FoldAssignment& folds, const CvGridOptions& options) {
  check_folds(est, folds);
  options.fit.validate();
  if (q_values.empty() || lambdas.empty()) throw InputError("CV grid must be non-empty");
  for (std::size_t s = 0; s < lambdas.size(); ++s) {
    Penalty{lambdas[s], xi}.validate();
    if (s > 0 && !(lambdas[s] > lambdas[s - 1])) {
      throw InputError("lambda grid must be strictly ascending");
    }
  }
  const std::size_t K = folds.size();
  const std::size_t nq = q_values.size();
  const std::size_t nl = lambdas.size();
  const std::size_t per_q = K + (options.full_fit ? 1 : 0);

  CvGrid grid;
  grid.xi = xi;
  grid.q_values.assign(q_values.begin(), q_values.end());
  grid.lambdas.assign(lambdas.begin(), lambdas.end());
  grid.folds = K;
  grid.cells.resize(nq * nl);

  // scores[(qi * per_q + task) * nl + li]
  std::vector<double> scores(nq * per_q * nl, 0.0);
  std::vector<char> converged(nq * per_q * nl, 0);
  std::vector<std::size_t> effective(nq * nl, 0);
  std::vector<ModelParams> estimates(nq * nl);

  const DesignBlocks full(est, weights);
  parallel_for(nq * per_q, options.threads, [&](std::size_t task) {
    const std::size_t qi = task / per_q;
    const std::size_t f = task % per_q;
    const std::size_t q = q_values[qi];
    const auto start = default_init(est.types(), q, est.window, options.fit.seed);
    const bool is_full = f == K;
    const DesignBlocks train =
        is_full ? full : DesignBlocks(est, held_out_weights(weights, folds.folds[f]));
    std::vector<FitResult> path;
    if (options.warm_start) {
      path = fit_path(train, start, lambdas, xi, options.fit);
    } else {
      for (double lambda : lambdas) path.push_back(fit(train, start, Penalty{lambda, xi}, options.fit));
    }
    for (std::size_t li = 0; li < nl; ++li) {
      const std::size_t slot = task * nl + li;
      converged[slot] = path[li].converged ? 1 : 0;
      if (is_full) {
        effective[qi * nl + li] = q_eff(path[li].params.alpha);
        estimates[qi * nl + li] = path[li].params;
      } else {
        scores[slot] = held_out_error(full, path[li].params, folds.folds[f]);
      }
    }
  });

  for (std::size_t qi = 0; qi < nq; ++qi) {
    for (std::size_t li = 0; li < nl; ++li) {
      auto& cell = grid.cells[qi * nl + li];
      cell.q = q_values[qi];
      cell.lambda = lambdas[li];
      for (std::size_t f = 0; f < K; ++f) {
        const std::size_t slot = (qi * per_q + f) * nl + li;
        cell.fold_scores.push_back(scores[slot]);
        cell.converged_folds += converged[slot];
      }
      cell.cv = std::accumulate(cell.fold_scores.begin(), cell.fold_scores.end(), 0.0) /
                static_cast<double>(K);
      cell.se = standard_error(cell.fold_scores);
      cell.q_eff = options.full_fit ? effective[qi * nl + li] : q_values[qi];
      cell.params = std::move(estimates[qi * nl + li]);
    }
  }
  return grid;
}

namespace {

// True when cell a is preferred to b at equal score: smaller q, then larger lambda.
bool simpler(const CvCell& a, const CvCell& b) {
  if (a.q != b.q) return a.q < b.q;
  return a.lambda > b.lambda;
}

}  // namespace

CvSelection select_min(const CvGrid& grid) {
  if (grid.cells.empty()) throw InputError("empty CV grid");
  std::size_t best = 0;
  for (std::size_t c = 1; c < grid.cells.size(); ++c) {
    const auto& cell = grid.cells[c];
    const auto& cur = grid.cells[best];
    if (cell.cv < cur.cv || (cell.cv == cur.cv && simpler(cell, cur))) best = c;
  }
  return {grid.cells[best].q, grid.cells[best].lambda, best};
}

CvSelection select_one_se(const CvGrid& grid) {
  const auto min = select_min(grid);
  const auto& opt = grid.cells[min.cell];
  const double bound = opt.cv + opt.se;
  std::size_t best = min.cell;
  for (std::size_t c = 0; c < grid.cells.size(); ++c) {
    const auto& cell = grid.cells[c];
    if (cell.cv <= bound && simpler(cell, grid.cells[best])) best = c;
  }
  return {grid.cells[best].q, grid.cells[best].lambda, best};
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid{0.0};
  const double lo = std::log(1e-3);
  const double hi = std::log(5.0);
  for (int s = 0; s < 19; ++s) grid.push_back(std::exp(lo + (hi - lo) * s / 18.0));
  grid[1] = 1e-3;
  grid.back() = 5.0;
  return grid;
}

std::vector<std::size_t> default_q_grid(std::size_t p) {
  std::vector<std::size_t> grid(std::min<std::size_t>(p, 10) + 1);
  std::iota(grid.begin(), grid.end(), std::size_t{0});
  return grid;
}

void write_cv_csv(std::ostream& out, std::span<const CvGrid> grids) {
  const auto old = out.precision(17);
  out << "xi,q,lambda,cv,se,q_eff,converged_folds\n";
  for (const auto& grid : grids) {
    for (const auto& cell : grid.cells) {
      out << grid.xi << ',' << cell.q << ',' << cell.lambda << ',' << cell.cv << ',' << cell.se
          << ',' << cell.q_eff << ',' << cell.converged_folds << '\n';
    }
  }
  out.precision(old);
}

}  // namespace mlgcp
