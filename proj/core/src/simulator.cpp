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

#include "mlgcp/simulator.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "mlgcp/error.hpp"
#include "mlgcp/parallel.hpp"
#include "mlgcp/params_json.hpp"

namespace mlgcp {

namespace {

constexpr double kIntensityCap = 1e12;
constexpr std::size_t kDenseLimit = 256;
constexpr int kMaxPaddingDoublings = 3;

std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

double torus_lag(std::size_t i, std::size_t m, double step) {
  return static_cast<double>(std::min(i, m - i)) * step;
}

// Square roots of the circulant eigenvalues divided by the torus size.
struct Embedding {
  std::size_t mx = 0;
  std::size_t my = 0;
  std::vector<double> root;
};

using EmbeddingKey = std::tuple<std::size_t, std::size_t, double, double, double>;

std::shared_ptr<const Embedding> build_embedding(std::size_t nx, std::size_t ny, double dx,
                                                 double dy, double scale) {
  std::size_t mx = 2 * nx;
  std::size_t my = 2 * ny;
  for (int attempt = 0; attempt <= kMaxPaddingDoublings; ++attempt, mx *= 2, my *= 2) {
    std::vector<std::complex<double>> buf(mx * my);
    for (std::size_t iy = 0; iy < my; ++iy) {
      const double hy = torus_lag(iy, my, dy);
      for (std::size_t ix = 0; ix < mx; ++ix) {
        const double hx = torus_lag(ix, mx, dx);
        buf[iy * mx + ix] = correlation(std::hypot(hx, hy), scale);
      }
    }
    auto* data = reinterpret_cast<fftw_complex*>(buf.data());
    fftw_plan plan;
    {
      std::lock_guard lock(fftw_mutex());
      plan = fftw_plan_dft_2d(static_cast<int>(my), static_cast<int>(mx), data, data,
                              FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
      std::lock_guard lock(fftw_mutex());
      fftw_destroy_plan(plan);
    }
    double most_negative = 0.0;
    double largest = 0.0;
    for (const auto& v : buf) {
      most_negative = std::min(most_negative, v.real());
      largest = std::max(largest, v.real());
    }
    if (most_negative >= -1e-10 * largest) {
      auto emb = std::make_shared<Embedding>();
      emb->mx = mx;
      emb->my = my;
      emb->root.resize(buf.size());
      const double total = static_cast<double>(mx * my);
      for (std::size_t c = 0; c < buf.size(); ++c) {
        emb->root[c] = std::sqrt(std::max(0.0, buf[c].real()) / total);
      }
      return emb;
    }
  }
  throw NumericalError("circulant embedding is not non-negative definite after padding");
}

std::shared_ptr<const Embedding> cached_embedding(std::size_t nx, std::size_t ny, double dx,
                                                  double dy, double scale) {
  static std::mutex mutex;
  static std::map<EmbeddingKey, std::shared_ptr<const Embedding>> cache;
  const EmbeddingKey key{nx, ny, dx, dy, scale};
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  auto emb = build_embedding(nx, ny, dx, dy, scale);
  std::lock_guard lock(mutex);
  if (cache.size() > 256) cache.clear();
  cache.emplace(key, emb);
  return emb;
}

GridField dense_field(GridField field, double scale, std::mt19937_64& rng) {
  const std::size_t n = field.nx * field.ny;
  const double dx = field.cell_width();
  const double dy = field.cell_height();
  Eigen::MatrixXd cov(n, n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const double hx = (static_cast<double>(a % field.nx) - static_cast<double>(b % field.nx)) * dx;
      const double hy = (static_cast<double>(a / field.nx) - static_cast<double>(b / field.nx)) * dy;
      cov(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          correlation(std::hypot(hx, hy), scale);
    }
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
  if (ldlt.info() != Eigen::Success) throw NumericalError("dense field factorization failed");
  std::normal_distribution<double> normal;
  Eigen::VectorXd z(n);
  for (std::size_t a = 0; a < n; ++a) z[static_cast<Eigen::Index>(a)] = normal(rng);
  const Eigen::VectorXd d = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
  Eigen::VectorXd x = ldlt.matrixL() * d.cwiseProduct(z);
  x = ldlt.transpositionsP().transpose() * x;
  field.values.assign(x.data(), x.data() + n);
  return field;
}

}  // namespace

GridField sample_gaussian_field(const Window& window, std::size_t nx, std::size_t ny,
                                double scale, std::uint64_t seed) {
  window.validate();
  if (nx < 2 || ny < 2) throw InputError("field resolution must be at least 2 per axis");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw InputError("field scale must be > 0");
  GridField field;
  field.window = window;
  field.nx = nx;
  field.ny = ny;
  std::mt19937_64 rng(seed);
  if (nx * ny <= kDenseLimit) return dense_field(std::move(field), scale, rng);

  const auto emb = cached_embedding(nx, ny, field.cell_width(), field.cell_height(), scale);
  std::vector<std::complex<double>> buf(emb->mx * emb->my);
  std::normal_distribution<double> normal;
  for (std::size_t c = 0; c < buf.size(); ++c) {
    const double re = normal(rng);
    const double im = normal(rng);
    buf[c] = emb->root[c] * std::complex<double>(re, im);
  }
  auto* data = reinterpret_cast<fftw_complex*>(buf.data());
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_mutex());
    plan = fftw_plan_dft_2d(static_cast<int>(emb->my), static_cast<int>(emb->mx), data, data,
                            FFTW_FORWARD, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(fftw_mutex());
    fftw_destroy_plan(plan);
  }
  field.values.resize(nx * ny);
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) field.values[iy * nx + ix] = buf[iy * emb->mx + ix].real();
  }
  return field;
}

void SimScenario::validate() const {
  window.validate();
  truth.validate();
  const auto p = static_cast<Eigen::Index>(truth.types());
  if (trend.size() != p || expected_counts.size() != p) {
    throw InputError("scenario trend and expected counts need one entry per type");
  }
  for (Eigen::Index i = 0; i < p; ++i) {
    if (!(expected_counts[i] > 0.0) || !std::isfinite(trend[i])) {
      throw InputError("scenario expected counts must be positive and trends finite");
    }
  }
  if (resolution < 2) throw InputError("scenario resolution must be >= 2");
}

SimScenario make_scenario(const ModelParams& truth, const Window& window,
                          const Eigen::VectorXd& expected_counts, std::size_t resolution,
                          std::uint64_t seed) {
  SimScenario s;
  s.window = window;
  s.truth = truth;
  s.expected_counts = expected_counts;
  s.resolution = resolution;
  s.seed = seed;
  const auto p = static_cast<Eigen::Index>(truth.types());
  if (expected_counts.size() != p) throw InputError("need one expected count per type");
  s.trend.resize(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    s.trend[i] = std::log(expected_counts[i] / window.area()) -
                 truth.alpha.row(i).squaredNorm() / 2.0 - truth.sigma2[i] / 2.0;
  }
  s.validate();
  return s;
}

SimScenario scenario_p5() {
  ModelParams truth;
  truth.alpha.resize(5, 2);
  truth.alpha << std::sqrt(0.5), 0.0,
                 1.0, 0.0,
                 -1.0, 1.0,
                 0.0, -1.0,
                 0.0, 0.5;
  truth.sigma2 = Eigen::VectorXd::Ones(5);
  truth.phi.resize(2);
  truth.phi << 0.02, 0.1;
  truth.psi.resize(5);
  truth.psi << 0.01, 0.02, 0.02, 0.03, 0.04;
  return make_scenario(truth, Window{}, Eigen::VectorXd::Constant(5, 1000.0));
}

SimScenario scenario_p10() {
  ModelParams truth;
  truth.alpha.resize(10, 4);
  for (int half = 0; half < 2; ++half) {
    truth.alpha.block(5 * half, 0, 5, 4) << std::sqrt(0.5), 0.1, -1.0, 0.0,
                                            0.0, 0.0, -0.7, 1.0,
                                            0.0, -0.15, std::sqrt(0.5), 0.1,
                                            -1.0, 0.0, 0.0, 0.0,
                                            -0.7, 1.0, 0.0, -0.15;
  }
  truth.sigma2.resize(10);
  truth.sigma2 << 1, 1, 1.5, 1, 0.2, 0.2, 1, 1.5, 1.5, 1.5;
  truth.phi.resize(4);
  truth.phi << 0.02, 0.03, 0.03, 0.05;
  truth.psi.resize(10);
  truth.psi << 0.01, 0.02, 0.02, 0.03, 0.04, 0.04, 0.05, 0.06, 0.06, 0.07;
  return make_scenario(truth, Window{}, Eigen::VectorXd::Constant(10, 1000.0));
}

MultiPointPattern sample_mlgcp(const SimScenario& scenario, SimStats* stats) {
  scenario.validate();
  const auto& truth = scenario.truth;
  const std::size_t p = truth.types();
  const std::size_t q = truth.factors();
  const std::size_t n = scenario.resolution;
  const Window& w = scenario.window;

  std::vector<GridField> common;
  common.reserve(q);
  for (std::size_t l = 0; l < q; ++l) {
    common.push_back(sample_gaussian_field(w, n, n, truth.phi[static_cast<Eigen::Index>(l)],
                                           derive_seed(scenario.seed, 0, l)));
  }

  MultiPointPattern out;
  out.window = w;
  out.points.resize(p);
  for (std::size_t i = 0; i < p; ++i) out.labels.push_back(std::to_string(i + 1));

  const double dx = w.width() / static_cast<double>(n);
  const double dy = w.height() / static_cast<double>(n);
  const double cell_area = dx * dy;
  std::size_t capped = 0;
  std::vector<double> z(n * n);
  for (std::size_t i = 0; i < p; ++i) {
    const auto ri = static_cast<Eigen::Index>(i);
    std::fill(z.begin(), z.end(), scenario.trend[ri]);
    for (std::size_t l = 0; l < q; ++l) {
      const double a = truth.alpha(ri, static_cast<Eigen::Index>(l));
      if (a == 0.0) continue;
      for (std::size_t c = 0; c < z.size(); ++c) z[c] += a * common[l].values[c];
    }
    if (truth.sigma2[ri] > 0.0) {
      const auto u = sample_gaussian_field(w, n, n, truth.psi[ri], derive_seed(scenario.seed, 1, i));
      const double sd = std::sqrt(truth.sigma2[ri]);
      for (std::size_t c = 0; c < z.size(); ++c) z[c] += sd * u.values[c];
    }
    std::mt19937_64 rng(derive_seed(scenario.seed, 2, i));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t iy = 0; iy < n; ++iy) {
      for (std::size_t ix = 0; ix < n; ++ix) {
        double intensity = std::exp(z[iy * n + ix]);
        if (!(intensity <= kIntensityCap)) {
          intensity = kIntensityCap;
          ++capped;
        }
        std::poisson_distribution<long long> poisson(intensity * cell_area);
        const long long count = poisson(rng);
        for (long long c = 0; c < count; ++c) {
          const double x = w.xmin + (static_cast<double>(ix) + unit(rng)) * dx;
          const double y = w.ymin + (static_cast<double>(iy) + unit(rng)) * dy;
          out.points[i].push_back({std::min(x, w.xmax), std::min(y, w.ymax)});
        }
      }
    }
  }
  if (stats) stats->capped_cells = capped;
  return out;
}

namespace {

using nlohmann::json;

json vec_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd vec_from(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_array()) {
    throw InputError(std::string("scenario JSON: missing array '") + key + "'");
  }
  const auto& arr = doc[key];
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  }
  return v;
}

}  // namespace

std::string scenario_to_json(const SimScenario& scenario, int indent) {
  json doc;
  const auto& w = scenario.window;
  doc["window"] = {{"xmin", w.xmin}, {"xmax", w.xmax}, {"ymin", w.ymin}, {"ymax", w.ymax}};
  doc["params"] = json::parse(params_to_json(scenario.truth));
  doc["trend"] = vec_json(scenario.trend);
  doc["expected_counts"] = vec_json(scenario.expected_counts);
  doc["resolution"] = scenario.resolution;
  doc["seed"] = scenario.seed;
  return doc.dump(indent);
}

SimScenario scenario_from_json(std::string_view text) {
  try {
    const json doc = json::parse(text);
    if (!doc.is_object() || !doc.contains("params")) {
      throw InputError("scenario JSON: expected an object with 'params'");
    }
    Window w;
    if (doc.contains("window")) {
      const auto& jw = doc["window"];
      w = Window{jw.at("xmin").get<double>(), jw.at("xmax").get<double>(),
                 jw.at("ymin").get<double>(), jw.at("ymax").get<double>()};
    }
    w.validate();
    const ModelParams truth = params_from_json(doc["params"].dump());
    const auto p = static_cast<Eigen::Index>(truth.types());
    const Eigen::VectorXd counts = doc.contains("expected_counts")
                                       ? vec_from(doc, "expected_counts")
                                       : Eigen::VectorXd::Constant(p, 1000.0);
    const std::size_t resolution = doc.value("resolution", std::size_t{256});
    const std::uint64_t seed = doc.value("seed", std::uint64_t{1});
    // The trend is always recomputed from the expected counts so the two
    // stay consistent.
    return make_scenario(truth, w, counts, resolution, seed);
  } catch (const json::exception& e) {
    throw InputError(std::string("scenario JSON: ") + e.what());
  }
}

SimScenario read_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return scenario_from_json(buffer.str());
}

}  // namespace mlgcp
