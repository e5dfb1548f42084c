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

#include "mlgcp/pcf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <set>
#include <string>
#include <tuple>

#include "csv.hpp"
#include "mlgcp/error.hpp"
#include "mlgcp/parallel.hpp"

namespace mlgcp {

bool PairLagArray::symmetric() const {
  for (std::size_t i = 0; i < types_; ++i) {
    for (std::size_t j = i + 1; j < types_; ++j) {
      for (std::size_t k = 0; k < lags_; ++k) {
        if ((*this)(i, j, k) != (*this)(j, i, k)) return false;
      }
    }
  }
  return true;
}

IntensitySurface IntensitySurface::constant(double value) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw InputError("intensity must be finite and positive");
  }
  IntensitySurface s;
  s.rule_ = value;
  return s;
}

IntensitySurface IntensitySurface::grid(const Window& window, std::size_t nx, std::size_t ny,
                                        std::vector<double> values) {
  window.validate();
  if (nx == 0 || ny == 0 || values.size() != nx * ny) {
    throw InputError("intensity grid must hold nx * ny values");
  }
  for (double v : values) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InputError("intensity grid values must be finite and positive");
    }
  }
  IntensitySurface s;
  s.rule_ = Grid{window, nx, ny, std::move(values)};
  return s;
}

double IntensitySurface::operator()(double x, double y) const {
  if (const auto* c = std::get_if<double>(&rule_)) return *c;
  const auto& g = std::get<Grid>(rule_);
  auto cell = [](double v, double lo, double width, std::size_t n) {
    const auto idx = static_cast<long>(std::floor((v - lo) / width * static_cast<double>(n)));
    return static_cast<std::size_t>(std::clamp<long>(idx, 0, static_cast<long>(n) - 1));
  };
  const auto cx = cell(x, g.window.xmin, g.window.width(), g.nx);
  const auto cy = cell(y, g.window.ymin, g.window.height(), g.ny);
  return g.values[cy * g.nx + cx];
}

IntensitySurface constant_intensity(const MultiPointPattern& pattern, std::size_t i) {
  if (i >= pattern.types()) throw InputError("type index out of range");
  const auto n = pattern.points[i].size();
  if (n == 0) {
    throw InputError("type " + std::to_string(i + 1) + " has no points; intensity would be zero");
  }
  return IntensitySurface::constant(static_cast<double>(n) / pattern.window.area());
}

double translation_overlap(const Window& window, double hx, double hy) {
  return std::max(0.0, window.width() - std::abs(hx)) *
         std::max(0.0, window.height() - std::abs(hy));
}

std::vector<double> default_lag_grid(const Window& window, std::size_t count) {
  if (count < 2) throw InputError("lag grid needs at least two lags");
  const double s = window.relative_scale();
  std::vector<double> lags(count);
  for (std::size_t k = 0; k < count; ++k) {
    lags[k] = s * (0.025 + 0.225 * static_cast<double>(k) / static_cast<double>(count - 1));
  }
  return lags;
}

double default_bandwidth(const Window& window) { return 0.005 * window.relative_scale(); }

namespace {

void check_lags(std::span<const double> lags) {
  if (lags.empty()) throw InputError("lag grid is empty");
  for (std::size_t k = 0; k < lags.size(); ++k) {
    if (!(lags[k] > 0.0) || !std::isfinite(lags[k])) {
      throw InputError("lags must be finite and positive");
    }
    if (k > 0 && !(lags[k] > lags[k - 1])) throw InputError("lags must be strictly increasing");
  }
}

// Points of one type bucketed into a uniform grid of cells (CSR layout).
struct CellIndex {
  std::size_t nx = 1;
  std::size_t ny = 1;
  std::vector<std::size_t> start;  // nx * ny + 1 offsets into order
  std::vector<std::size_t> order;  // point indices sorted by cell
  std::vector<std::size_t> cell_of;
};

CellIndex build_index(const std::vector<Point>& pts, const Window& w, double reach) {
  CellIndex idx;
  idx.nx = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(w.width() / reach)));
  idx.ny = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(w.height() / reach)));
  const double cw = w.width() / static_cast<double>(idx.nx);
  const double ch = w.height() / static_cast<double>(idx.ny);
  idx.cell_of.resize(pts.size());
  std::vector<std::size_t> counts(idx.nx * idx.ny + 1, 0);
  for (std::size_t a = 0; a < pts.size(); ++a) {
    const auto cx = std::min(idx.nx - 1, static_cast<std::size_t>((pts[a].x - w.xmin) / cw));
    const auto cy = std::min(idx.ny - 1, static_cast<std::size_t>((pts[a].y - w.ymin) / ch));
    idx.cell_of[a] = cy * idx.nx + cx;
    ++counts[idx.cell_of[a] + 1];
  }
  idx.start.assign(counts.size(), 0);
  for (std::size_t c = 1; c < counts.size(); ++c) idx.start[c] = idx.start[c - 1] + counts[c];
  idx.order.resize(pts.size());
  std::vector<std::size_t> fill(idx.start.begin(), idx.start.end() - 1);
  for (std::size_t a = 0; a < pts.size(); ++a) idx.order[fill[idx.cell_of[a]]++] = a;
  return idx;
}

}  // namespace

PcfEstimate estimate_pcf(const MultiPointPattern& pattern,
                         std::span<const IntensitySurface> intensities,
                         std::span<const double> lags, double bandwidth, std::size_t threads) {
  pattern.validate();
  check_lags(lags);
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw InputError("bandwidth must be positive");
  }
  const std::size_t p = pattern.types();
  if (intensities.size() != p) throw InputError("need one intensity surface per type");
  const std::size_t L = lags.size();
  const Window& w = pattern.window;

  std::vector<std::vector<double>> inv_rho(p);
  for (std::size_t i = 0; i < p; ++i) {
    inv_rho[i].reserve(pattern.points[i].size());
    for (const auto& pt : pattern.points[i]) {
      const double rho = intensities[i](pt.x, pt.y);
      if (!(rho > 0.0) || !std::isfinite(rho)) {
        throw InputError("intensity must be positive at every point");
      }
      inv_rho[i].push_back(1.0 / rho);
    }
  }

  const double reach = lags.back() + bandwidth;
  std::vector<CellIndex> index;
  index.reserve(p);
  for (std::size_t i = 0; i < p; ++i) index.push_back(build_index(pattern.points[i], w, reach));

  std::vector<std::pair<std::size_t, std::size_t>> tasks;
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i; j < p; ++j) tasks.emplace_back(i, j);
  }

  PcfEstimate est;
  est.window = w;
  est.lags.assign(lags.begin(), lags.end());
  est.ghat = PairLagArray(p, L);
  est.bandwidth = bandwidth;
  std::vector<std::size_t> skipped(tasks.size(), 0);
  const double kernel_height = 1.0 / (2.0 * bandwidth);

  parallel_for(tasks.size(), threads, [&](std::size_t task) {
    const auto [i, j] = tasks[task];
    const auto& xi = pattern.points[i];
    const auto& xj = pattern.points[j];
    const auto& grid_j = index[j];
    const double diag_factor = (i == j) ? 2.0 : 1.0;
    std::vector<double> sums(L, 0.0);
    for (std::size_t a = 0; a < xi.size(); ++a) {
      const auto cell = index[i].cell_of[a];
      const auto cx = static_cast<long>(cell % grid_j.nx);
      const auto cy = static_cast<long>(cell / grid_j.nx);
      for (long ny = cy - 1; ny <= cy + 1; ++ny) {
        if (ny < 0 || ny >= static_cast<long>(grid_j.ny)) continue;
        for (long nx = cx - 1; nx <= cx + 1; ++nx) {
          if (nx < 0 || nx >= static_cast<long>(grid_j.nx)) continue;
          const auto c = static_cast<std::size_t>(ny) * grid_j.nx + static_cast<std::size_t>(nx);
          for (auto s = grid_j.start[c]; s < grid_j.start[c + 1]; ++s) {
            const auto b = grid_j.order[s];
            if (i == j && b <= a) continue;
            const double dx = xi[a].x - xj[b].x;
            const double dy = xi[a].y - xj[b].y;
            const double d = std::sqrt(dx * dx + dy * dy);
            if (d > reach) continue;
            auto k = static_cast<std::size_t>(
                std::lower_bound(lags.begin(), lags.end(), d - bandwidth) - lags.begin());
            if (k >= L || lags[k] > d + bandwidth) continue;
            const double overlap = translation_overlap(w, dx, dy);
            if (!(overlap > 0.0)) {
              ++skipped[task];
              continue;
            }
            const double term =
                diag_factor * kernel_height * inv_rho[i][a] * inv_rho[j][b] / overlap;
            for (; k < L && lags[k] <= d + bandwidth; ++k) sums[k] += term;
          }
        }
      }
    }
    for (std::size_t k = 0; k < L; ++k) {
      const double g = sums[k] / (2.0 * std::numbers::pi * lags[k]);
      est.ghat(i, j, k) = g;
      est.ghat(j, i, k) = g;
    }
  });
  for (auto s : skipped) est.skipped_pairs += s;
  return est;
}

PcfEstimate estimate_pcf(const MultiPointPattern& pattern, std::size_t threads) {
  std::vector<IntensitySurface> rho;
  for (std::size_t i = 0; i < pattern.types(); ++i) rho.push_back(constant_intensity(pattern, i));
  const auto lags = default_lag_grid(pattern.window);
  return estimate_pcf(pattern, rho, lags, default_bandwidth(pattern.window), threads);
}

LogResponse log_pcf_response(const PcfEstimate& est, const PairLagArray& weights) {
  const auto p = est.types();
  const auto L = est.lags.size();
  if (weights.types() != p || weights.lags() != L) {
    throw InputError("weights must match the estimate's p x p x L shape");
  }
  LogResponse out{PairLagArray(p, p == 0 ? 0 : L), PairLagArray(p, L)};
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t k = 0; k < L; ++k) {
        const double w = weights(i, j, k);
        if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("weights must be finite and >= 0");
        const double g = est.ghat(i, j, k);
        if (!(g > 0.0) || !std::isfinite(g)) continue;
        out.weights(i, j, k) = w;
        out.response(i, j, k) = std::sqrt(w) * std::log(g);
      }
    }
  }
  return out;
}

PairLagArray default_weights(const PcfEstimate& est) {
  const auto p = est.types();
  const auto L = est.lags.size();
  PairLagArray w(p, L);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t k = 0; k < L; ++k) {
        const double g = est.ghat(i, j, k);
        if (!(g > 0.0) || !std::isfinite(g)) continue;
        w(i, j, k) = (i == j) ? g : g / 2.0;
      }
    }
  }
  return w;
}

PcfEstimate theoretical_pcf(const ModelParams& params, const Window& window,
                            std::span<const double> lags) {
  params.validate();
  check_lags(lags);
  const auto p = params.types();
  PcfEstimate est;
  est.window = window;
  est.lags.assign(lags.begin(), lags.end());
  est.ghat = PairLagArray(p, lags.size());
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i; j < p; ++j) {
      for (std::size_t k = 0; k < lags.size(); ++k) {
        const double g = cross_pcf(params, i, j, lags[k]);
        est.ghat(i, j, k) = g;
        est.ghat(j, i, k) = g;
      }
    }
  }
  return est;
}

void write_pcf_csv(std::ostream& out, const PcfEstimate& est, const PairLagArray& weights) {
  const auto p = est.types();
  const auto L = est.lags.size();
  if (weights.types() != p || weights.lags() != L) {
    throw InputError("weights must match the estimate's shape");
  }
  out << "i,j,lag,ghat,weight\n" << std::setprecision(17);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t k = 0; k < L; ++k) {
        out << i + 1 << ',' << j + 1 << ',' << est.lags[k] << ',' << est.ghat(i, j, k) << ','
            << weights(i, j, k) << '\n';
      }
    }
  }
}

PcfTable read_pcf_csv(std::istream& in, const Window& window) {
  window.validate();
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw InputError("pcf CSV is empty");
  const auto header = detail::split_csv(line);
  if (header.size() != 5 || header[0] != "i" || header[1] != "j" || header[2] != "lag" ||
      header[3] != "ghat" || header[4] != "weight") {
    throw InputError("pcf CSV header must be 'i,j,lag,ghat,weight'");
  }
  struct Row {
    std::size_t i, j;
    double lag, ghat, weight;
  };
  std::vector<Row> rows;
  std::set<double> lag_set;
  std::size_t p = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != 5) throw InputError("line " + std::to_string(line_no) + ": expected 5 fields");
    const double fi = detail::parse_double(f[0], line_no);
    const double fj = detail::parse_double(f[1], line_no);
    if (fi < 1 || fj < 1 || fi != std::floor(fi) || fj != std::floor(fj)) {
      throw InputError("line " + std::to_string(line_no) + ": type indices must be >= 1");
    }
    Row r{static_cast<std::size_t>(fi) - 1, static_cast<std::size_t>(fj) - 1,
          detail::parse_double(f[2], line_no), detail::parse_double(f[3], line_no),
          detail::parse_double(f[4], line_no)};
    p = std::max({p, r.i + 1, r.j + 1});
    lag_set.insert(r.lag);
    rows.push_back(r);
  }
  PcfTable table;
  table.estimate.window = window;
  table.estimate.lags.assign(lag_set.begin(), lag_set.end());
  check_lags(table.estimate.lags);
  const auto L = table.estimate.lags.size();
  if (rows.size() != p * p * L) {
    throw InputError("pcf CSV must contain every (i, j, lag) combination exactly once");
  }
  table.estimate.ghat = PairLagArray(p, L, std::nan(""));
  table.weights = PairLagArray(p, L);
  for (const auto& r : rows) {
    const auto k = static_cast<std::size_t>(
        std::lower_bound(table.estimate.lags.begin(), table.estimate.lags.end(), r.lag) -
        table.estimate.lags.begin());
    if (!std::isnan(table.estimate.ghat(r.i, r.j, k))) {
      throw InputError("pcf CSV has a duplicated (i, j, lag) row");
    }
    table.estimate.ghat(r.i, r.j, k) = r.ghat;
    table.weights(r.i, r.j, k) = r.weight;
  }
  return table;
}

PcfTable read_pcf_csv(const std::filesystem::path& path, const Window& window) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path.string());
  return read_pcf_csv(in, window);
}

}  // namespace mlgcp
