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

#include <functional>

#include <Eigen/Dense>

namespace mlgcp {

/// Objective for minimize_bfgs: returns f(x) and writes the gradient into
/// `grad` (already sized like x). Non-finite values are treated as +inf by
/// the line search.
using SmoothObjective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct BfgsOptions {
  int max_iterations = 25;
  double gradient_tolerance = 1e-8;  // stop when max |g_i| <= this
  double relative_tolerance = 0.0;   // stop when |df| <= rel * (|f| + rel)
  int max_backtracks = 40;
  double armijo = 1e-4;
  double max_step = 0.0;  // cap on the Euclidean length of a trial step; 0 means none
};

struct BfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

/// Quasi-Newton minimization with BFGS inverse-Hessian updates started from
/// the identity, and backtracking Armijo line search. The returned value
/// never exceeds f(x0).
BfgsResult minimize_bfgs(const SmoothObjective& f, const Eigen::VectorXd& x0,
                         const BfgsOptions& options = {});

}  // namespace mlgcp
