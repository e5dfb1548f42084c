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
#include <limits>

#include "mlgcp/error.hpp"
#include "mlgcp/optimizer.hpp"

namespace mlgcp {

namespace {

using Eigen::Index;
using Eigen::VectorXd;

// Layout: alpha row-major, sigma2, phi, psi (each on the log scale when
// `logs` is set).
ModelParams unpack(const VectorXd& x, Index p, Index q, bool logs) {
  ModelParams params;
  params.alpha.resize(p, q);
  Index o = 0;
  for (Index i = 0; i < p; ++i) {
    for (Index l = 0; l < q; ++l) params.alpha(i, l) = x[o++];
  }
  auto map = [&](Index n) -> VectorXd {
    VectorXd v = x.segment(o, n);
    o += n;
    return logs ? VectorXd(v.array().exp()) : v;
  };
  params.sigma2 = map(p);
  params.phi = map(q);
  params.psi = map(p);
  return params;
}

// Variable-metric minimizer in the style of R's optim(method = "BFGS"):
// inverse Hessian reset to the identity on failure and every 2n gradient
// evaluations, backtracking by 0.2 with an Armijo fraction of 1e-4, and
// termination once even a steepest-descent step improves f by less than
// reltol. `max_iterations` counts gradient evaluations.
BfgsResult variable_metric(const SmoothObjective& f, const VectorXd& x0, int max_iterations,
                           double reltol) {
  constexpr double kStepReduction = 0.2;
  constexpr double kAcceptTol = 1e-4;
  constexpr double kRelTest = 10.0;
  const Index n = x0.size();
  BfgsResult out;
  out.x = x0;
  VectorXd g(n);
  auto eval = [&](const VectorXd& x, VectorXd& grad) {
    ++out.evaluations;
    const double v = f(x, grad);
    return std::isfinite(v) && grad.allFinite() ? v : std::numeric_limits<double>::infinity();
  };
  double fmin = eval(out.x, g);
  out.value = fmin;
  if (!std::isfinite(fmin) || n == 0) return out;

  Eigen::MatrixXd B = Eigen::MatrixXd::Identity(n, n);
  int gradcount = 1;
  int ilast = gradcount;
  int iter = 1;
  Index count = 0;
  VectorXd b = out.x;
  VectorXd trial(n);
  VectorXd gtrial(n);
  do {
    if (ilast == gradcount) B.setIdentity();
    const VectorXd X = b;
    const VectorXd c = g;
    VectorXd t = -(B * g);
    const double gradproj = t.dot(g);
    if (gradproj < 0.0) {
      double step = 1.0;
      bool accepted = false;
      double fv = fmin;
      do {
        count = 0;
        for (Index i = 0; i < n; ++i) {
          trial[i] = X[i] + step * t[i];
          if (kRelTest + X[i] == kRelTest + trial[i]) ++count;
        }
        if (count < n) {
          fv = eval(trial, gtrial);
          accepted = std::isfinite(fv) && fv <= fmin + gradproj * step * kAcceptTol;
          if (!accepted) step *= kStepReduction;
        }
      } while (!(count == n || accepted));
      if (count < n) {
        const bool enough = std::abs(fv - fmin) > reltol * (std::abs(fmin) + reltol);
        if (!enough) {
          count = n;
          if (fv < fmin) {
            fmin = fv;
            b = trial;
          }
        } else {
          fmin = fv;
          b = trial;
          g = gtrial;
          ++gradcount;
          ++iter;
          t *= step;
          const VectorXd y = g - c;
          const double d1 = t.dot(y);
          if (d1 > 0.0) {
            const VectorXd By = B * y;
            const double d2 = 1.0 + y.dot(By) / d1;
            B += (d2 * t * t.transpose() - t * By.transpose() - By * t.transpose()) / d1;
          } else {
            ilast = gradcount;
          }
        }
      }
      if (count == n && ilast < gradcount) {
        count = 0;
        ilast = gradcount;
      }
    } else {
      count = 0;
      if (ilast == gradcount) {
        count = n;
      } else {
        ilast = gradcount;
      }
    }
    if (iter >= max_iterations) break;
    if (gradcount - ilast > 2 * n) ilast = gradcount;
  } while (count != n || ilast != gradcount);
  out.x = b;
  out.value = fmin;
  out.iterations = iter;
  out.converged = iter < max_iterations;
  return out;
}

}  // namespace

FitResult fit_joint_bfgs(const DesignBlocks& blocks, const ModelParams& init,
                         const JointBfgsOptions& options) {
  init.validate();
  if (init.types() != blocks.types()) throw InputError("params do not match the design");
  const auto p = static_cast<Index>(init.types());
  const auto q = static_cast<Index>(init.factors());

  VectorXd x0(p * q + 2 * p + q);
  Index o = 0;
  for (Index i = 0; i < p; ++i) {
    for (Index l = 0; l < q; ++l) x0[o++] = init.alpha(i, l);
  }
  const bool logs = options.log_parameters;
  auto put = [&](double v) { x0[o++] = logs ? std::log(v) : v; };
  for (Index i = 0; i < p; ++i) put(std::max(init.sigma2[i], options.sigma2_floor));
  for (Index l = 0; l < q; ++l) put(init.phi[l]);
  for (Index i = 0; i < p; ++i) put(init.psi[i]);

  DesignBlocks work = blocks;
  int evaluations = 0;
  SmoothObjective f = [&](const VectorXd& x, VectorXd& grad) {
    ++evaluations;
    if (!x.allFinite()) return std::numeric_limits<double>::infinity();
    const ModelParams params = unpack(x, p, q, logs);
    if (!params.sigma2.allFinite() || !params.phi.allFinite() || !params.psi.allFinite() ||
        params.sigma2.minCoeff() < 0.0 || (params.phi.size() && params.phi.minCoeff() <= 0.0) ||
        params.psi.minCoeff() <= 0.0) {
      return std::numeric_limits<double>::infinity();
    }
    work.set_scales(params.phi, params.psi);
    const auto g = objective_gradient(work, params);
    Index k = 0;
    for (Index i = 0; i < p; ++i) {
      for (Index l = 0; l < q; ++l) grad[k++] = g.alpha(i, l);
    }
    for (Index i = 0; i < p; ++i) grad[k++] = g.sigma2[i] * (logs ? params.sigma2[i] : 1.0);
    for (Index l = 0; l < q; ++l) grad[k++] = g.log_phi[l] / (logs ? 1.0 : params.phi[l]);
    for (Index i = 0; i < p; ++i) grad[k++] = g.log_psi[i] / (logs ? 1.0 : params.psi[i]);
    return objective_q(work, params);
  };

  FitResult out;
  VectorXd scratch(x0.size());
  out.trace.push_back(f(x0, scratch));
  const auto res =
      variable_metric(f, x0, options.max_iterations, options.relative_tolerance);
  out.params = unpack(res.x, p, q, logs);
  out.iterations = res.iterations;
  out.converged = res.converged;
  out.q = res.value;
  out.q_lambda = res.value;
  out.trace.push_back(res.value);
  return out;
}

}  // namespace mlgcp
