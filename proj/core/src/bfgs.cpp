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

#include "mlgcp/bfgs.hpp"

#include <cmath>
#include <limits>

namespace mlgcp {

namespace {

double safe_eval(const SmoothObjective& f, const Eigen::VectorXd& x, Eigen::VectorXd& g) {
  const double v = f(x, g);
  if (!std::isfinite(v) || !g.allFinite()) return std::numeric_limits<double>::infinity();
  return v;
}

}  // namespace

BfgsResult minimize_bfgs(const SmoothObjective& f, const Eigen::VectorXd& x0,
                         const BfgsOptions& options) {
  const auto n = x0.size();
  BfgsResult out;
  out.x = x0;
  Eigen::VectorXd g(n);
  out.value = safe_eval(f, out.x, g);
  out.evaluations = 1;
  if (n == 0 || !std::isfinite(out.value)) {
    out.converged = n == 0;
    return out;
  }

  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd g_new(n);
  Eigen::VectorXd x_new(n);
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    if (g.cwiseAbs().maxCoeff() <= options.gradient_tolerance) {
      out.converged = true;
      break;
    }
    Eigen::VectorXd d = -H * g;
    if (!(g.dot(d) < 0.0)) {
      H.setIdentity();
      d = -g;
    }
    if (options.max_step > 0.0 && d.norm() > options.max_step) d *= options.max_step / d.norm();
    const double slope = g.dot(d);

    double t = 1.0;
    double v_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int bt = 0; bt <= options.max_backtracks; ++bt) {
      x_new = out.x + t * d;
      v_new = safe_eval(f, x_new, g_new);
      ++out.evaluations;
      if (v_new <= out.value + options.armijo * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    out.iterations = iter + 1;
    if (!accepted) break;

    const Eigen::VectorXd s = x_new - out.x;
    const Eigen::VectorXd y = g_new - g;
    const double previous = out.value;
    out.x = x_new;
    out.value = v_new;
    g = g_new;

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm() && sy > 0.0) {
      if (iter == 0) H *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Eigen::VectorXd Hy = H * y;
      H += (rho * rho * y.dot(Hy) + rho) * (s * s.transpose()) -
           rho * (Hy * s.transpose() + s * Hy.transpose());
    }
    if (options.relative_tolerance > 0.0 &&
        std::abs(previous - out.value) <=
            options.relative_tolerance * (std::abs(out.value) + options.relative_tolerance)) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace mlgcp
