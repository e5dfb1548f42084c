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

#include "mlgcp/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>

#include "mlgcp/error.hpp"

namespace mlgcp {

void FitConfig::validate() const {
  if (max_outer_iters < 1) throw InputError("max_outer_iters must be >= 1");
  if (!(rel_tol >= 0.0)) throw InputError("rel_tol must be >= 0");
  if (!(line_search.initial_step > 0.0)) throw InputError("initial step must be > 0");
  if (!(line_search.factor > 0.0 && line_search.factor < 1.0)) {
    throw InputError("backtracking factor must lie in (0, 1)");
  }
  if (line_search.max_backtracks < 0) throw InputError("max_backtracks must be >= 0");
  if (cd_max_sweeps < 1) throw InputError("cd_max_sweeps must be >= 1");
  if (scale_max_iters < 0) throw InputError("scale_max_iters must be >= 0");
  if (!(scale_floor > 0.0)) throw InputError("scale_floor must be > 0");
}

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Returns blocks itself when its cached rows already match params' scales,
// otherwise a cheap copy with the rows refreshed.
const DesignBlocks& at_scales(const DesignBlocks& blocks, const ModelParams& params,
                              std::optional<DesignBlocks>& local) {
  if (blocks.has_scales(params.phi, params.psi)) return blocks;
  local.emplace(blocks);
  local->set_scales(params.phi, params.psi);
  return *local;
}

void check_dims(const DesignBlocks& blocks, const ModelParams& params) {
  params.validate();
  if (params.types() != blocks.types()) {
    throw InputError("parameters have " + std::to_string(params.types()) +
                     " types but the design has " + std::to_string(blocks.types()));
  }
}

void check_type(const ModelParams& params, std::size_t i) {
  if (i >= params.types()) throw std::out_of_range("type index out of range");
}

}  // namespace

double update_sigma2(const DesignBlocks& blocks, const ModelParams& params, std::size_t i,
                     bool* active) {
  check_type(params, i);
  std::optional<DesignBlocks> local;
  const auto& b = at_scales(blocks, params, local);
  const auto& R = b.common_rows();
  const auto& C = b.specific_rows();
  const auto ri = static_cast<Index>(i);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < b.lag_count(); ++k) {
    const double sw = b.sqrt_weight(i, i, k);
    const auto rk = static_cast<Index>(k);
    const double c = sw * C(rk, ri);
    double fitted = 0.0;
    for (Index l = 0; l < R.cols(); ++l) {
      fitted += R(rk, l) * params.alpha(ri, l) * params.alpha(ri, l);
    }
    num += c * (b.response(i, i, k) - sw * fitted);
    den += c * c;
  }
  if (active) *active = den > 0.0;
  if (!(den > 0.0)) return params.sigma2[ri];
  return std::max(0.0, num / den);
}

double ProxNewtonSystem::model_value(const VectorXd& row, const Penalty& penalty) const {
  double s = 0.0;
  for (std::size_t j = 0; j < ystar.size(); ++j) s += (ystar[j] - xstar[j] * row).squaredNorm();
  double pen = 0.0;
  if (penalty.lambda != 0.0) {
    for (Index l = 0; l < row.size(); ++l) pen += penalty.term(row[l]);
  }
  return s + penalty.lambda * pen;
}

ProxNewtonSystem prox_newton_transform(const DesignBlocks& blocks, const ModelParams& params,
                                       std::size_t i, const VectorXd& current_row) {
  check_type(params, i);
  std::optional<DesignBlocks> local;
  const auto& b = at_scales(blocks, params, local);
  const auto p = b.types();
  const auto L = static_cast<Index>(b.lag_count());
  const auto q = params.alpha.cols();
  if (current_row.size() != q) throw InputError("row length must equal q");
  const auto& R = b.common_rows();
  const auto& C = b.specific_rows();
  const auto ri = static_cast<Index>(i);
  const double root2 = std::sqrt(2.0);

  ProxNewtonSystem sys;
  sys.ystar.resize(p);
  sys.xstar.resize(p);
  sys.gram = MatrixXd::Zero(q, q);
  sys.cross = VectorXd::Zero(q);
  for (std::size_t j = 0; j < p; ++j) {
    VectorXd y(L);
    MatrixXd x(L, q);
    const auto rj = static_cast<Index>(j);
    for (Index k = 0; k < L; ++k) {
      const auto uk = static_cast<std::size_t>(k);
      const double sw = b.sqrt_weight(i, j, uk);
      if (j != i) {
        y[k] = root2 * b.response(i, j, uk);
        for (Index l = 0; l < q; ++l) x(k, l) = root2 * sw * R(k, l) * params.alpha(rj, l);
      } else {
        double quad = 0.0;
        for (Index l = 0; l < q; ++l) {
          quad += R(k, l) * current_row[l] * current_row[l];
          x(k, l) = 2.0 * sw * R(k, l) * current_row[l];
        }
        y[k] = b.response(i, i, uk) + sw * quad - sw * params.sigma2[ri] * C(k, ri);
      }
    }
    sys.gram.noalias() += x.transpose() * x;
    sys.cross.noalias() += x.transpose() * y;
    sys.ystar[j] = std::move(y);
    sys.xstar[j] = std::move(x);
  }
  return sys;
}

double soft_threshold(double a, double gamma) {
  if (a > gamma) return a - gamma;
  if (a < -gamma) return a + gamma;
  return 0.0;
}

double coordinate_update_alpha(const ProxNewtonSystem& system, const VectorXd& row,
                               std::size_t l, const Penalty& penalty) {
  const auto il = static_cast<Index>(l);
  double partial = system.cross[il];
  for (Index m = 0; m < row.size(); ++m) {
    if (m != il) partial -= system.gram(il, m) * row[m];
  }
  const double den = 2.0 * system.gram(il, il) + penalty.lambda * (1.0 - penalty.xi);
  // A coordinate whose design column has vanished (e.g. a common scale at
  // its floor) is numerically singular; treat it like a zero denominator.
  const double scale = 1.0 + system.gram.diagonal().cwiseAbs().maxCoeff();
  if (!(den > 1e-14 * scale)) return 0.0;
  return soft_threshold(2.0 * partial, penalty.lambda * penalty.xi) / den;
}

VectorXd minimize_prox_model(const ProxNewtonSystem& system, VectorXd start,
                             const Penalty& penalty, const FitConfig& config) {
  VectorXd a = std::move(start);
  for (int sweep = 0; sweep < config.cd_max_sweeps; ++sweep) {
    double change = 0.0;
    for (Index l = 0; l < a.size(); ++l) {
      const double old = a[l];
      a[l] = coordinate_update_alpha(system, a, static_cast<std::size_t>(l), penalty);
      change = std::max(change, std::abs(a[l] - old));
    }
    const double size = a.size() ? a.cwiseAbs().maxCoeff() : 0.0;
    if (change <= config.cd_tol * std::max(1.0, size)) break;
  }
  return a;
}

double row_objective(const DesignBlocks& blocks, const ModelParams& params, std::size_t i,
                     const VectorXd& row, const Penalty& penalty) {
  check_type(params, i);
  std::optional<DesignBlocks> local;
  const auto& b = at_scales(blocks, params, local);
  const auto p = b.types();
  const auto L = static_cast<Index>(b.lag_count());
  const auto q = params.alpha.cols();
  const auto& R = b.common_rows();
  const auto& C = b.specific_rows();
  const auto ri = static_cast<Index>(i);
  double off = 0.0;
  double diag = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    const auto rj = static_cast<Index>(j);
    for (Index k = 0; k < L; ++k) {
      const auto uk = static_cast<std::size_t>(k);
      const double sw = b.sqrt_weight(i, j, uk);
      double fitted = 0.0;
      if (j != i) {
        for (Index l = 0; l < q; ++l) fitted += R(k, l) * params.alpha(rj, l) * row[l];
        const double r = b.response(i, j, uk) - sw * fitted;
        off += r * r;
      } else {
        for (Index l = 0; l < q; ++l) fitted += R(k, l) * row[l] * row[l];
        fitted += params.sigma2[ri] * C(k, ri);
        const double r = b.response(i, i, uk) - sw * fitted;
        diag += r * r;
      }
    }
  }
  double pen = 0.0;
  if (penalty.lambda != 0.0) {
    for (Index l = 0; l < q; ++l) pen += penalty.term(row[l]);
  }
  return 2.0 * off + diag + penalty.lambda * pen;
}

RowUpdate update_alpha_row(const DesignBlocks& blocks, const ModelParams& params, std::size_t i,
                           const Penalty& penalty, const FitConfig& config) {
  check_type(params, i);
  std::optional<DesignBlocks> local;
  const auto& b = at_scales(blocks, params, local);
  const VectorXd a0 = params.alpha.row(static_cast<Index>(i)).transpose();
  RowUpdate out;
  out.row = a0;
  out.before = row_objective(b, params, i, a0, penalty);
  out.after = out.before;
  if (a0.size() == 0) return out;

  const auto sys = prox_newton_transform(b, params, i, a0);
  const VectorXd target = minimize_prox_model(sys, a0, penalty, config);
  const VectorXd d = target - a0;
  if (d.isZero(0.0)) return out;

  double t = config.line_search.initial_step;
  for (int bt = 0; bt <= config.line_search.max_backtracks; ++bt) {
    const VectorXd cand = a0 + t * d;
    const double f = row_objective(b, params, i, cand, penalty);
    if (f < out.before) {
      out.row = cand;
      out.after = f;
      out.step = t;
      return out;
    }
    t *= config.line_search.factor;
  }
  out.stalled = true;
  return out;
}

namespace {

// Q restricted to the terms that depend on phi, evaluated over unordered
// pairs (i <= j) with off-diagonal pairs counted twice.
struct PhiObjective {
  const DesignBlocks& b;
  const ModelParams& params;
  std::vector<Index> active;
  double log_floor;
  MatrixXd specific_part;  // L x p, sigma2_i c_i(t_k)

  double operator()(const VectorXd& x, VectorXd& grad) const {
    const auto p = static_cast<Index>(b.types());
    const auto L = static_cast<Index>(b.lag_count());
    const auto q = params.alpha.cols();
    VectorXd phi = params.phi;
    for (std::size_t a = 0; a < active.size(); ++a) {
      if (x[static_cast<Index>(a)] < log_floor) return std::numeric_limits<double>::infinity();
      phi[active[a]] = std::exp(x[static_cast<Index>(a)]);
    }
    const MatrixXd R = correlation_rows(b.lags(), phi);
    const MatrixXd dR = correlation_rows_dlog(b.lags(), phi);
    double value = 0.0;
    VectorXd g = VectorXd::Zero(q);
    VectorXd m(q);
    for (Index i = 0; i < p; ++i) {
      for (Index j = i; j < p; ++j) {
        const double mult = i == j ? 1.0 : 2.0;
        m = params.alpha.row(i).cwiseProduct(params.alpha.row(j)).transpose();
        for (Index k = 0; k < L; ++k) {
          const auto ui = static_cast<std::size_t>(i);
          const auto uj = static_cast<std::size_t>(j);
          const auto uk = static_cast<std::size_t>(k);
          const double sw = b.sqrt_weight(ui, uj, uk);
          double fitted = R.row(k).dot(m);
          if (i == j) fitted += specific_part(k, i);
          const double r = b.response(ui, uj, uk) - sw * fitted;
          value += mult * r * r;
          if (sw != 0.0) {
            for (Index l = 0; l < q; ++l) g[l] -= 2.0 * mult * r * sw * m[l] * dR(k, l);
          }
        }
      }
    }
    for (std::size_t a = 0; a < active.size(); ++a) grad[static_cast<Index>(a)] = g[active[a]];
    return value;
  }
};

// Diagonal terms of Q, the only ones that depend on psi.
struct PsiObjective {
  const DesignBlocks& b;
  const ModelParams& params;
  std::vector<Index> active;
  double log_floor;
  MatrixXd common_part;  // L x p, sum_l r_l(t_k) alpha_il^2

  double operator()(const VectorXd& x, VectorXd& grad) const {
    const auto L = static_cast<Index>(b.lag_count());
    double value = 0.0;
    for (std::size_t a = 0; a < active.size(); ++a) {
      const auto ax = static_cast<Index>(a);
      if (x[ax] < log_floor) return std::numeric_limits<double>::infinity();
      const Index i = active[a];
      const auto ui = static_cast<std::size_t>(i);
      const double psi = std::exp(x[ax]);
      double g = 0.0;
      for (Index k = 0; k < L; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        const double t = b.lags()[uk];
        const double sw = b.sqrt_weight(ui, ui, uk);
        const double fitted = common_part(k, i) + params.sigma2[i] * correlation(t, psi);
        const double r = b.response(ui, ui, uk) - sw * fitted;
        value += r * r;
        g -= 2.0 * r * sw * params.sigma2[i] * correlation_dlog_scale(t, psi);
      }
      grad[ax] = g;
    }
    return value;
  }
};

}  // namespace

VectorXd update_scales(const DesignBlocks& blocks, const ModelParams& params, ScaleBlock which,
                       const FitConfig& config) {
  std::optional<DesignBlocks> local;
  const auto& b = at_scales(blocks, params, local);
  const auto p = static_cast<Index>(b.types());
  const auto L = static_cast<Index>(b.lag_count());
  const auto q = params.alpha.cols();
  const double log_floor = std::log(config.scale_floor);
  BfgsOptions opts;
  opts.max_iterations = config.scale_max_iters;
  opts.gradient_tolerance = config.scale_gradient_tol;
  opts.max_step = 1.0;

  VectorXd current = which == ScaleBlock::phi ? params.phi : params.psi;
  std::vector<Index> active;
  VectorXd x0;
  BfgsResult res;
  if (which == ScaleBlock::phi) {
    for (Index l = 0; l < q; ++l) {
      if (params.alpha.col(l).cwiseAbs().maxCoeff() > 0.0) active.push_back(l);
    }
    if (active.empty() || config.scale_max_iters == 0) return current;
    MatrixXd spec(L, p);
    const auto& C = b.specific_rows();
    for (Index i = 0; i < p; ++i) spec.col(i) = params.sigma2[i] * C.col(i);
    PhiObjective obj{b, params, active, log_floor, std::move(spec)};
    x0.resize(static_cast<Index>(active.size()));
    for (std::size_t a = 0; a < active.size(); ++a) {
      x0[static_cast<Index>(a)] = std::log(std::max(current[active[a]], config.scale_floor));
    }
    res = minimize_bfgs(std::cref(obj), x0, opts);
  } else {
    for (Index i = 0; i < p; ++i) {
      bool weighted = false;
      for (Index k = 0; k < L; ++k) {
        const auto ui = static_cast<std::size_t>(i);
        if (b.sqrt_weight(ui, ui, static_cast<std::size_t>(k)) != 0.0) weighted = true;
      }
      if (params.sigma2[i] > 0.0 && weighted) active.push_back(i);
    }
    if (active.empty() || config.scale_max_iters == 0) return current;
    const MatrixXd common = b.common_rows() * params.alpha.array().square().matrix().transpose();
    PsiObjective obj{b, params, active, log_floor, common};
    x0.resize(static_cast<Index>(active.size()));
    for (std::size_t a = 0; a < active.size(); ++a) {
      x0[static_cast<Index>(a)] = std::log(std::max(current[active[a]], config.scale_floor));
    }
    res = minimize_bfgs(std::cref(obj), x0, opts);
  }
  if (!std::isfinite(res.value)) return current;

  VectorXd updated = current;
  for (std::size_t a = 0; a < active.size(); ++a) {
    updated[active[a]] = std::max(std::exp(res.x[static_cast<Index>(a)]), config.scale_floor);
  }
  if (updated == current) return current;
  ModelParams trial = params;
  if (which == ScaleBlock::phi) {
    trial.phi = updated;
  } else {
    trial.psi = updated;
  }
  DesignBlocks check = b;
  check.set_scales(trial.phi, trial.psi);
  if (objective_q(check, trial) > objective_q(b, params)) return current;
  return updated;
}

FitResult fit(const DesignBlocks& blocks, const ModelParams& init, const Penalty& penalty,
              const FitConfig& config) {
  config.validate();
  penalty.validate();
  check_dims(blocks, init);

  FitResult out;
  out.lambda = penalty.lambda;
  out.xi = penalty.xi;
  ModelParams theta = init;
  DesignBlocks work = blocks;
  work.set_scales(theta.phi, theta.psi);
  const auto p = theta.types();

  double prev = objective_q_lambda(work, theta, penalty);
  if (!std::isfinite(prev)) throw NumericalError("objective is not finite at the starting point");
  out.trace.push_back(prev);

  auto record = [&](int it, std::string name, double q_lambda, double step) {
    out.steps.push_back(
        {it, std::move(name), q_lambda - penalty.value(theta.alpha), q_lambda, step});
  };

  for (int it = 1; it <= config.max_outer_iters; ++it) {
    double running = prev;
    for (std::size_t i = 0; i < p; ++i) {
      const auto ri = static_cast<Index>(i);
      if (config.record_blocks) {
        const VectorXd row = theta.alpha.row(ri).transpose();
        const double before = row_objective(work, theta, i, row, penalty);
        theta.sigma2[ri] = update_sigma2(work, theta, i);
        running += row_objective(work, theta, i, row, penalty) - before;
        record(it, "sigma2[" + std::to_string(i + 1) + "]", running, 0.0);
      } else {
        theta.sigma2[ri] = update_sigma2(work, theta, i);
      }
      const auto ru = update_alpha_row(work, theta, i, penalty, config);
      theta.alpha.row(ri) = ru.row.transpose();
      if (ru.stalled) ++out.stalled_rows;
      if (config.record_blocks) {
        running += ru.after - ru.before;
        record(it, "alpha[" + std::to_string(i + 1) + "]", running, ru.step);
      }
    }
    if (theta.factors() > 0) {
      theta.phi = update_scales(work, theta, ScaleBlock::phi, config);
      work.set_scales(theta.phi, theta.psi);
      if (config.record_blocks) record(it, "phi", objective_q_lambda(work, theta, penalty), 0.0);
    }
    theta.psi = update_scales(work, theta, ScaleBlock::psi, config);
    work.set_scales(theta.phi, theta.psi);

    const double now = objective_q_lambda(work, theta, penalty);
    if (!std::isfinite(now)) throw NumericalError("objective became non-finite during the fit");
    if (config.record_blocks) record(it, "psi", now, 0.0);
    record(it, "sweep", now, 0.0);
    out.trace.push_back(now);
    out.iterations = it;
    const bool done = std::abs(now - prev) <= config.rel_tol * std::max(1.0, std::abs(prev));
    prev = now;
    if (done) {
      out.converged = true;
      break;
    }
  }
  out.params = std::move(theta);
  out.q_lambda = prev;
  out.q = objective_q(work, out.params);
  return out;
}

std::vector<FitResult> fit_path(const DesignBlocks& blocks, const ModelParams& init,
                                std::span<const double> lambdas, double xi,
                                const FitConfig& config) {
  for (std::size_t s = 1; s < lambdas.size(); ++s) {
    if (lambdas[s] < lambdas[s - 1]) throw InputError("lambda path must be ascending");
  }
  std::vector<FitResult> path;
  path.reserve(lambdas.size());
  ModelParams start = init;
  for (double lambda : lambdas) {
    path.push_back(fit(blocks, start, Penalty{lambda, xi}, config));
    start = path.back().params;
  }
  return path;
}

ModelParams default_init(std::size_t p, std::size_t q, const Window& window,
                         std::uint64_t seed) {
  if (p == 0) throw InputError("need at least one type");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.05);
  std::uniform_real_distribution<double> uniform(0.01, 0.05);
  const double scale = window.relative_scale();
  ModelParams params;
  const auto P = static_cast<Index>(p);
  const auto Q = static_cast<Index>(q);
  params.alpha.resize(P, Q);
  for (Index i = 0; i < P; ++i) {
    for (Index l = 0; l < Q; ++l) params.alpha(i, l) = normal(rng);
  }
  params.sigma2 = VectorXd::Ones(P);
  params.phi.resize(Q);
  for (Index l = 0; l < Q; ++l) params.phi[l] = uniform(rng) * scale;
  params.psi.resize(P);
  for (Index i = 0; i < P; ++i) params.psi[i] = uniform(rng) * scale;
  return params;
}

}  // namespace mlgcp
