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

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "mlgcp/design.hpp"
#include "mlgcp/error.hpp"
#include "test_util.hpp"

namespace mlgcp {
namespace {

// One type, one lag, everything set by hand.
PcfEstimate single_lag(double ghat, double lag = 0.02) {
  PcfEstimate est;
  est.lags = {lag};
  est.ghat = PairLagArray(1, 1, ghat);
  return est;
}

ModelParams one_factor(double alpha, double sigma2, double phi, double psi) {
  ModelParams params;
  params.alpha = Eigen::MatrixXd::Constant(1, 1, alpha);
  params.sigma2 = Eigen::VectorXd::Constant(1, sigma2);
  params.phi = Eigen::VectorXd::Constant(1, phi);
  params.psi = Eigen::VectorXd::Constant(1, psi);
  return params;
}

TEST(Penalty, Arithmetic) {
  const Eigen::MatrixXd a = Eigen::MatrixXd::Constant(1, 1, 3.0);
  EXPECT_EQ((Penalty{2.0, 1.0}).value(a), 6.0);
  EXPECT_EQ((Penalty{2.0, 0.0}).value(a), 9.0);
  EXPECT_THROW((Penalty{-1.0, 0.5}).validate(), InputError);
  EXPECT_THROW((Penalty{1.0, 1.5}).validate(), InputError);
}

TEST(DesignBlocks, RowValuesAndShapes) {
  const auto est = single_lag(1.0);
  PairLagArray w(1, 1, 1.0);
  DesignBlocks blocks(est, w);
  blocks.set_scales(Eigen::VectorXd::Constant(1, 0.02), Eigen::VectorXd::Constant(1, 0.04));
  const auto x = blocks.design_matrix(0, 0);
  ASSERT_EQ(x.cols(), 2);
  EXPECT_NEAR(x(0, 0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(x(0, 1), std::exp(-0.5), 1e-15);

  auto inst = testing::make_instance(3, 2, 0.1, 5);
  inst.blocks.set_scales(inst.truth.phi, inst.truth.psi);
  EXPECT_EQ(inst.blocks.design_matrix(0, 1).cols(), 2);
  EXPECT_EQ(inst.blocks.design_matrix(2, 2).cols(), 3);
}

TEST(DesignBlocks, NoCommonFactors) {
  auto inst = testing::make_instance(2, 0, 0.0, 8);
  inst.blocks.set_scales(inst.truth.phi, inst.truth.psi);
  EXPECT_EQ(inst.blocks.common_rows().rows(), static_cast<Eigen::Index>(inst.est.lags.size()));
  EXPECT_EQ(inst.blocks.common_rows().cols(), 0);
  EXPECT_EQ(inst.blocks.design_matrix(1, 1).cols(), 1);
  EXPECT_LT(objective_q(inst.blocks, inst.truth), 1e-20);
}

TEST(DesignBlocks, ZeroWeightRow) {
  auto inst = testing::make_instance(2, 1, 0.1, 6);
  inst.weights(0, 1, 3) = 0.0;
  inst.weights(1, 0, 3) = 0.0;
  DesignBlocks blocks(inst.est, inst.weights);
  blocks.set_scales(inst.truth.phi, inst.truth.psi);
  EXPECT_TRUE(blocks.design_matrix(0, 1).row(3).isZero(0.0));
  EXPECT_EQ(blocks.response_vector(0, 1)[3], 0.0);
}

TEST(DesignBlocks, CachesByScale) {
  auto inst = testing::make_instance(3, 2, 0.1, 7);
  DesignBlocks blocks = inst.blocks;
  blocks.set_scales(inst.truth.phi, inst.truth.psi);
  const auto n = blocks.cache_refreshes();
  blocks.set_scales(inst.truth.phi, inst.truth.psi);
  EXPECT_EQ(blocks.cache_refreshes(), n);
  Eigen::VectorXd phi = inst.truth.phi * 1.5;
  blocks.set_scales(phi, inst.truth.psi);
  EXPECT_EQ(blocks.cache_refreshes(), n + 1);
  EXPECT_TRUE(blocks.has_scales(phi, inst.truth.psi));
}

TEST(ObjectiveQ, ScalarExamples) {
  // X = (0.5, 0.5) needs r = c = 0.5 at the lag: t = scale * log 2.
  const double t = 0.02 * std::log(2.0);
  const auto est = single_lag(std::exp(1.0), t);
  PairLagArray w(1, 1, 1.0);
  DesignBlocks blocks(est, w);
  EXPECT_NEAR(objective_q(blocks, one_factor(1.0, 1.0, 0.02, 0.02)), 0.0, 1e-28);
  EXPECT_NEAR(objective_q(blocks, one_factor(1.0, 0.0, 0.02, 0.02)), 0.25, 1e-15);
}

TEST(ObjectiveQ, NoiselessIsZeroAndZeroWeightsGiveZero) {
  auto inst = testing::make_instance(4, 2, 0.0, 8);
  EXPECT_LT(objective_q(inst.blocks, inst.truth), 1e-18);
  PairLagArray zero(4, inst.est.lags.size(), 0.0);
  DesignBlocks blocks(inst.est, zero);
  EXPECT_EQ(objective_q(blocks, inst.truth), 0.0);
}

// Each off-diagonal pair enters the sum twice.
TEST(ObjectiveQ, CountsOrderedPairs) {
  auto inst = testing::make_instance(3, 1, 0.2, 9);
  const auto res = residuals(inst.blocks, inst.truth);
  double want = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      for (std::size_t k = 0; k < inst.est.lags.size(); ++k) {
        want += res(i, j, k) * res(i, j, k);
      }
    }
  }
  EXPECT_NEAR(objective_q(inst.blocks, inst.truth), want, 1e-12 * want);
  EXPECT_EQ(res(0, 1, 4), res(1, 0, 4));
}

TEST(ObjectiveQLambda, PenaltyRelation) {
  auto inst = testing::make_instance(3, 2, 0.2, 10);
  const double q = objective_q(inst.blocks, inst.truth);
  EXPECT_EQ(objective_q_lambda(inst.blocks, inst.truth, Penalty{0.0, 0.3}), q);
  EXPECT_GT(objective_q_lambda(inst.blocks, inst.truth, Penalty{0.5, 0.3}), q);
  auto zero = inst.truth;
  zero.alpha.setZero();
  EXPECT_EQ(objective_q_lambda(inst.blocks, zero, Penalty{0.5, 0.3}),
            objective_q(inst.blocks, zero));
}

TEST(ObjectiveQ, ExactlyInvariantToColumnPermutationAndSign) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto inst = testing::make_instance(4, 3, 0.3, 100 + seed);
    auto moved = inst.truth;
    const int perm[3] = {1, 2, 0};
    for (int l = 0; l < 3; ++l) {
      moved.alpha.col(l) = inst.truth.alpha.col(perm[l]);
      moved.phi[l] = inst.truth.phi[perm[l]];
    }
    moved.alpha.col(2) *= -1.0;
    const Penalty pen{0.3, 0.4};
    EXPECT_EQ(objective_q(inst.blocks, moved), objective_q(inst.blocks, inst.truth));
    EXPECT_EQ(objective_q_lambda(inst.blocks, moved, pen),
              objective_q_lambda(inst.blocks, inst.truth, pen));
  }
}

TEST(ObjectiveGradient, MatchesCentralDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto inst = testing::make_instance(3, 2, 0.3, 200 + seed);
    std::mt19937_64 rng(seed);
    auto at = testing::random_params(3, 2, rng);
    const auto g = objective_gradient(inst.blocks, at);
    auto central = [&](double& value, double h) {
      const double x0 = value;
      value = x0 + h;
      const double up = objective_q(inst.blocks, at);
      value = x0 - h;
      const double down = objective_q(inst.blocks, at);
      value = x0;
      return (up - down) / (2.0 * h);
    };
    for (Eigen::Index i = 0; i < 3; ++i) {
      for (Eigen::Index l = 0; l < 2; ++l) {
        double& v = at.alpha(i, l);
        const double fd = central(v, 1e-6 * std::max(1.0, std::abs(v)));
        EXPECT_NEAR(g.alpha(i, l), fd, 1e-5 * std::max(1.0, std::abs(fd)));
      }
    }
    // Log-scale and variance coordinates, perturbed through their own parametrization.
    auto check_log = [&](double analytic, double& value) {
      const double x0 = std::log(value);
      const double h = 1e-6 * std::max(1.0, std::abs(x0));
      value = std::exp(x0 + h);
      const double up = objective_q(inst.blocks, at);
      value = std::exp(x0 - h);
      const double down = objective_q(inst.blocks, at);
      value = std::exp(x0);
      const double fd = (up - down) / (2.0 * h);
      EXPECT_NEAR(analytic, fd, 1e-5 * std::max(1.0, std::abs(fd)));
    };
    for (Eigen::Index l = 0; l < 2; ++l) check_log(g.log_phi[l], at.phi[l]);
    for (Eigen::Index i = 0; i < 3; ++i) check_log(g.log_psi[i], at.psi[i]);
    for (Eigen::Index i = 0; i < 3; ++i) {
      double& v = at.sigma2[i];
      const double fd = central(v, 1e-6 * std::max(1.0, v));
      EXPECT_NEAR(g.sigma2[i], fd, 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

}  // namespace
}  // namespace mlgcp
