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

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <tuple>
#include <vector>

#include <gtest/gtest.h>

#include "mlgcp/error.hpp"
#include "mlgcp/selection.hpp"
#include "test_util.hpp"

namespace mlgcp {
namespace {

CvGrid synthetic_grid(std::vector<std::size_t> qs, std::vector<double> lambdas,
                      const std::vector<double>& cv, const std::vector<double>& se) {
  CvGrid grid;
  grid.q_values = std::move(qs);
  grid.lambdas = std::move(lambdas);
  grid.folds = 4;
  for (std::size_t n = 0; n < cv.size(); ++n) {
    CvCell cell;
    cell.q = grid.q_values[n / grid.lambdas.size()];
    cell.lambda = grid.lambdas[n % grid.lambdas.size()];
    cell.cv = cv[n];
    cell.se = se[n];
    grid.cells.push_back(cell);
  }
  return grid;
}

TEST(MakeFolds, SmallExample) {
  const auto folds = make_folds(2, 4, 2, 2, 3);
  ASSERT_EQ(folds.size(), 2u);
  std::vector<std::vector<Triple>> got = folds.folds;
  std::sort(got.begin(), got.end(), [](const auto& a, const auto& b) { return a[0].k < b[0].k; });
  EXPECT_EQ(got[0], (std::vector<Triple>{{0, 1, 0}, {0, 1, 1}}));
  EXPECT_EQ(got[1], (std::vector<Triple>{{0, 1, 2}, {0, 1, 3}}));
}

TEST(MakeFolds, PartitionOfOffDiagonalTriples) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::size_t p = 3 + seed % 4;
    const std::size_t L = 25;
    const auto folds = make_folds(p, L, 8, 5, seed);
    std::set<std::tuple<std::size_t, std::size_t, std::size_t>> seen;
    std::size_t total = 0;
    for (const auto& fold : folds.folds) {
      for (const auto& t : fold) {
        EXPECT_LT(t.i, t.j);
        seen.emplace(t.i, t.j, t.k);
        ++total;
      }
    }
    EXPECT_EQ(total, p * (p - 1) / 2 * L);
    EXPECT_EQ(seen.size(), total);
  }
}

TEST(MakeFolds, DeterministicAndValidated) {
  EXPECT_EQ(make_folds(4, 25, 8, 5, 11).folds, make_folds(4, 25, 8, 5, 11).folds);
  EXPECT_NE(make_folds(4, 25, 8, 5, 11).folds, make_folds(4, 25, 8, 5, 12).folds);
  EXPECT_THROW(make_folds(2, 4, 3, 2, 1), InputError);
  EXPECT_THROW(make_folds(2, 4, 1, 2, 1), InputError);
  EXPECT_THROW(make_folds(2, 4, 2, 0, 1), InputError);
}

TEST(HeldOutWeights, ZeroesMirror) {
  auto inst = testing::make_instance(3, 1, 0.1, 50);
  const std::vector<Triple> fold{{0, 2, 4}};
  const auto w = held_out_weights(inst.weights, fold);
  EXPECT_EQ(w(0, 2, 4), 0.0);
  EXPECT_EQ(w(2, 0, 4), 0.0);
  EXPECT_EQ(w(0, 2, 3), inst.weights(0, 2, 3));
  EXPECT_EQ(w(0, 0, 4), inst.weights(0, 0, 4));
}

TEST(StandardError, Formula) {
  const std::vector<double> scores{1.0, 2.0, 4.0, 5.0};
  const double mean = 3.0;
  double ss = 0.0;
  for (double s : scores) ss += (s - mean) * (s - mean);
  EXPECT_DOUBLE_EQ(standard_error(scores), std::sqrt(ss / (3.0 * 4.0)));
  EXPECT_EQ(standard_error(std::vector<double>{2.0}), 0.0);
}

TEST(CvScore, NoiselessNestedModelIsZero) {
  auto inst = testing::make_instance(3, 1, 0.0, 51);
  const auto folds = make_folds(3, inst.est.lags.size(), 4, 5, 2);
  const auto score = cv_score(inst.est, inst.weights, 1, Penalty{}, folds, FitConfig{}, &inst.truth);
  EXPECT_LT(score.cv, 1e-16);
}

TEST(CvScore, AllWeightsZero) {
  auto inst = testing::make_instance(3, 1, 0.2, 52);
  PairLagArray zero(3, inst.est.lags.size(), 0.0);
  const auto folds = make_folds(3, inst.est.lags.size(), 4, 5, 2);
  EXPECT_EQ(cv_score(inst.est, zero, 1, Penalty{}, folds, FitConfig{}).cv, 0.0);
}

// Two off-diagonal triples, one per fold; the fit at each fold is checked
// against the held-out squared residual computed by hand.
TEST(CvScore, TwoTripleHandExample) {
  PcfEstimate est;
  est.lags = {0.05, 0.1};
  est.ghat = PairLagArray(2, 2, 1.0);
  est.ghat(0, 1, 0) = est.ghat(1, 0, 0) = std::exp(0.4);
  est.ghat(0, 1, 1) = est.ghat(1, 0, 1) = std::exp(0.1);
  PairLagArray w(2, 2, 1.0);
  const auto folds = make_folds(2, 2, 2, 1, 5);
  ModelParams init;
  init.alpha = Eigen::MatrixXd::Constant(2, 1, 0.5);
  init.sigma2 = Eigen::VectorXd::Constant(2, 0.1);
  init.phi = Eigen::VectorXd::Constant(1, 0.1);
  init.psi = Eigen::VectorXd::Constant(2, 0.05);
  const auto score = cv_score(est, w, 1, Penalty{}, folds, FitConfig{}, &init);
  ASSERT_EQ(score.fold_scores.size(), 2u);
  DesignBlocks full(est, w);
  for (std::size_t c = 0; c < 2; ++c) {
    const auto fold_w = held_out_weights(w, folds.folds[c]);
    const auto fitted = fit(DesignBlocks(est, fold_w), init, Penalty{}, FitConfig{});
    const auto t = folds.folds[c][0];
    const double r = std::log(est.ghat(t.i, t.j, t.k)) -
                     fitted.params.alpha(0, 0) * fitted.params.alpha(1, 0) *
                         std::exp(-est.lags[t.k] / fitted.params.phi[0]);
    EXPECT_NEAR(score.fold_scores[c], r * r, 1e-12);
  }
  EXPECT_DOUBLE_EQ(score.cv, (score.fold_scores[0] + score.fold_scores[1]) / 2.0);
}

TEST(CvScore, InvariantToFoldOrder) {
  auto inst = testing::make_instance(3, 1, 0.2, 53);
  auto folds = make_folds(3, inst.est.lags.size(), 4, 5, 7);
  const auto a = cv_score(inst.est, inst.weights, 1, Penalty{0.1, 1.0}, folds, FitConfig{});
  std::reverse(folds.folds.begin(), folds.folds.end());
  const auto b = cv_score(inst.est, inst.weights, 1, Penalty{0.1, 1.0}, folds, FitConfig{});
  EXPECT_NEAR(a.cv, b.cv, 1e-15 * std::max(1.0, a.cv));
}

TEST(SelectMin, Rules) {
  EXPECT_EQ(select_min(synthetic_grid({2}, {0.5}, {3.0}, {0.0})).cell, 0u);
  const auto convex = synthetic_grid({1, 2, 3}, {0.0, 0.1, 1.0},
                                     {9, 5, 7, 4, 1, 3, 8, 6, 9}, std::vector<double>(9, 0.1));
  const auto pick = select_min(convex);
  EXPECT_EQ(pick.q, 2u);
  EXPECT_EQ(pick.lambda, 0.1);
  const auto tie = synthetic_grid({2, 3}, {0.1, 0.2}, {1.0, 2.0, 1.0, 3.0}, {0, 0, 0, 0});
  EXPECT_EQ(select_min(tie).q, 2u);
  EXPECT_EQ(select_min(tie).lambda, 0.1);
  const auto lambda_tie = synthetic_grid({2}, {0.1, 0.2}, {1.0, 1.0}, {0, 0});
  EXPECT_EQ(select_min(lambda_tie).lambda, 0.2);
}

TEST(SelectOneSe, Rules) {
  const auto no_se = synthetic_grid({1, 2}, {0.0, 0.1}, {5, 4, 3, 6}, {0, 0, 0, 0});
  EXPECT_EQ(select_one_se(no_se).cell, select_min(no_se).cell);
  const auto flat = synthetic_grid({1, 2, 3}, {0.0, 0.1, 1.0}, std::vector<double>(9, 2.0),
                                   std::vector<double>(9, 0.0));
  EXPECT_EQ(select_one_se(flat).q, 1u);
  EXPECT_EQ(select_one_se(flat).lambda, 1.0);
  // Min at (q=2, 0.1) with SE 0.5: candidates within 1.5 are (1, 0) and (2, 0.1).
  const auto hand = synthetic_grid({1, 2}, {0.0, 0.1}, {1.4, 1.6, 1.7, 1.0}, {0.1, 0.1, 0.1, 0.5});
  EXPECT_EQ(select_one_se(hand).q, 1u);
  EXPECT_EQ(select_one_se(hand).lambda, 0.0);
}

TEST(SelectOneSe, NeverMoreComplexThanMin) {
  std::mt19937_64 rng(54);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> cv(12);
    std::vector<double> se(12);
    for (auto& v : cv) v = u(rng);
    for (auto& v : se) v = 0.2 * u(rng);
    const auto grid = synthetic_grid({0, 1, 2, 3}, {0.0, 0.1, 1.0}, cv, se);
    const auto best = select_min(grid);
    const auto simple = select_one_se(grid);
    EXPECT_LE(simple.q, best.q);
    if (simple.q == best.q) EXPECT_GE(simple.lambda, best.lambda);
  }
}

TEST(DefaultLambdaGrid, Shape) {
  const auto grid = default_lambda_grid();
  ASSERT_EQ(grid.size(), 20u);
  EXPECT_EQ(grid[0], 0.0);
  EXPECT_EQ(grid[1], 1e-3);
  EXPECT_EQ(grid.back(), 5.0);
  const double ratio = grid[2] / grid[1];
  for (std::size_t n = 2; n < grid.size(); ++n) EXPECT_NEAR(grid[n] / grid[n - 1], ratio, 1e-12);
  EXPECT_EQ(default_q_grid(3), (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_EQ(default_q_grid(40).back(), 10u);
}

TEST(EvaluateCvGrid, WarmAndColdShareTheFirstLambda) {
  auto inst = testing::make_instance(3, 1, 0.0, 55);
  const auto folds = make_folds(3, inst.est.lags.size(), 4, 5, 8);
  const std::vector<std::size_t> qs{1, 2};
  const std::vector<double> lambdas{0.0, 0.01, 0.1};
  CvGridOptions warm;
  warm.threads = 2;
  CvGridOptions cold = warm;
  cold.warm_start = false;
  const auto a = evaluate_cv_grid(inst.est, inst.weights, qs, lambdas, 1.0, folds, warm);
  const auto b = evaluate_cv_grid(inst.est, inst.weights, qs, lambdas, 1.0, folds, cold);
  ASSERT_EQ(a.cells.size(), 6u);
  for (std::size_t iq = 0; iq < qs.size(); ++iq) EXPECT_EQ(a.at(iq, 0).cv, b.at(iq, 0).cv);
  EXPECT_EQ(a.at(1, 2).q, 2u);
  EXPECT_EQ(a.at(1, 2).lambda, 0.1);
}

TEST(EvaluateCvGrid, ThreadCountDoesNotChangeScores) {
  auto inst = testing::make_instance(3, 1, 0.2, 56);
  const auto folds = make_folds(3, inst.est.lags.size(), 3, 5, 8);
  const std::vector<std::size_t> qs{1};
  const std::vector<double> lambdas{0.0, 0.1};
  CvGridOptions one;
  CvGridOptions four;
  four.threads = 4;
  const auto a = evaluate_cv_grid(inst.est, inst.weights, qs, lambdas, 1.0, folds, one);
  const auto b = evaluate_cv_grid(inst.est, inst.weights, qs, lambdas, 1.0, folds, four);
  for (std::size_t n = 0; n < a.cells.size(); ++n) EXPECT_EQ(a.cells[n].cv, b.cells[n].cv);
}

TEST(WriteCvCsv, RowsPerCell) {
  const auto grid = synthetic_grid({1, 2}, {0.0, 0.1, 1.0}, std::vector<double>(6, 1.0),
                                   std::vector<double>(6, 0.0));
  std::stringstream ss;
  write_cv_csv(ss, std::vector<CvGrid>{grid, grid});
  std::string line;
  std::getline(ss, line);
  EXPECT_EQ(line, "xi,q,lambda,cv,se,q_eff,converged_folds");
  int rows = 0;
  while (std::getline(ss, line)) ++rows;
  EXPECT_EQ(rows, 12);
}

}  // namespace
}  // namespace mlgcp
