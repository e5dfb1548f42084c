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

#include "mlgcp/cli/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mlgcp/cli/study.hpp"
#include "mlgcp/cli/summary.hpp"
#include "mlgcp/design.hpp"
#include "mlgcp/error.hpp"
#include "mlgcp/optimizer.hpp"
#include "mlgcp/parallel.hpp"
#include "mlgcp/params_json.hpp"
#include "mlgcp/pattern.hpp"
#include "mlgcp/pcf.hpp"
#include "mlgcp/selection.hpp"
#include "mlgcp/simulator.hpp"

namespace mlgcp::cli {

namespace {

using nlohmann::json;

// JSON config files: either {"fit": {"q": 2, ...}} or flat keys, which are
// applied to the subcommand being run. Options given on the command line win.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* app) : app_(app) {}

  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return {}; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json doc;
    try {
      input >> doc;
    } catch (const json::exception& e) {
      throw CLI::ConversionError(std::string("config file: ") + e.what());
    }
    if (!doc.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    const auto subs = app_->get_subcommands();
    const std::string active = subs.empty() ? "" : subs.front()->get_name();
    for (auto it = doc.begin(); it != doc.end(); ++it) {
      if (it->is_object()) {
        for (auto jt = it->begin(); jt != it->end(); ++jt) {
          items.push_back(item({it.key()}, jt.key(), *jt));
        }
      } else if (!active.empty()) {
        items.push_back(item({active}, it.key(), *it));
      } else {
        items.push_back(item({}, it.key(), *it));
      }
    }
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw CLI::ConversionError("config values must be scalars or arrays of scalars");
  }

  static CLI::ConfigItem item(std::vector<std::string> parents, const std::string& name,
                              const json& value) {
    CLI::ConfigItem out;
    out.parents = std::move(parents);
    out.name = name;
    if (value.is_array()) {
      for (const auto& v : value) out.inputs.push_back(scalar(v));
    } else {
      out.inputs.push_back(scalar(value));
    }
    return out;
  }

  const CLI::App* app_;
};

Window make_window(const std::vector<double>& v) {
  if (v.size() != 4) throw InputError("--window takes xmin,xmax,ymin,ymax");
  Window w{v[0], v[1], v[2], v[3]};
  w.validate();
  return w;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  return out;
}

// Writes `text` to `path`, or to `fallback` when path is empty.
void emit(const std::string& path, const std::string& text, std::ostream& fallback) {
  if (path.empty()) {
    fallback << text << '\n';
    return;
  }
  auto out = open_output(path);
  out << text << '\n';
}

SimScenario resolve_scenario(const std::string& name) {
  if (name == "p5") return scenario_p5();
  if (name == "p10") return scenario_p10();
  return read_scenario(name);
}

struct WindowOpt {
  std::vector<double> window{0.0, 1.0, 0.0, 1.0};
};

void add_window(CLI::App* cmd, WindowOpt& opt) {
  cmd->add_option("--window", opt.window, "Observation window xmin,xmax,ymin,ymax")
      ->expected(4)
      ->delimiter(',');
}

// Pattern or pcf input shared by fit and cv.
struct DataOpt {
  WindowOpt window;
  std::string pattern;
  std::string pcf;
  std::string noiseless_from;
  std::vector<double> lags;
  double bandwidth = 0.0;
  std::size_t threads = 1;
};

void add_data(CLI::App* cmd, DataOpt& opt) {
  add_window(cmd, opt.window);
  auto* in = cmd->add_option("--input", opt.pattern, "Point pattern CSV (x,y,type)");
  auto* pcf = cmd->add_option("--pcf", opt.pcf, "Pre-computed pcf CSV (i,j,lag,ghat,weight)");
  auto* nl = cmd->add_option("--noiseless-from", opt.noiseless_from,
                             "Use the exact pcfs of a params JSON as data (testing)");
  in->excludes(pcf)->excludes(nl);
  pcf->excludes(nl);
  nl->group("");
  cmd->add_option("--lags", opt.lags, "Lag grid (default: 25 lags on [0.025, 0.25])")
      ->delimiter(',');
  cmd->add_option("--bandwidth", opt.bandwidth, "Kernel half-width (default 0.005)");
  cmd->add_option("--threads", opt.threads, "Worker threads (0 = all cores)");
}

PcfTable load_data(const DataOpt& opt) {
  const Window window = make_window(opt.window.window);
  const std::vector<double> lags = opt.lags.empty() ? default_lag_grid(window) : opt.lags;
  if (!opt.pcf.empty()) return read_pcf_csv(std::filesystem::path(opt.pcf), window);
  PcfTable table;
  if (!opt.noiseless_from.empty()) {
    table.estimate = theoretical_pcf(read_params(opt.noiseless_from), window, lags);
  } else if (!opt.pattern.empty()) {
    const auto pattern = read_pattern_csv(std::filesystem::path(opt.pattern), window);
    std::vector<IntensitySurface> rho;
    for (std::size_t i = 0; i < pattern.types(); ++i) rho.push_back(constant_intensity(pattern, i));
    const double b = opt.bandwidth > 0.0 ? opt.bandwidth : default_bandwidth(window);
    table.estimate = estimate_pcf(pattern, rho, lags, b, resolve_threads(opt.threads));
  } else {
    throw InputError("one of --input or --pcf is required");
  }
  table.weights = default_weights(table.estimate);
  return table;
}

struct FitTuning {
  int max_iter = 500;
  double tol = 1e-6;
  std::uint64_t seed = 1;
};

void add_tuning(CLI::App* cmd, FitTuning& opt) {
  cmd->add_option("--max-iter", opt.max_iter, "Maximum outer sweeps");
  cmd->add_option("--tol", opt.tol, "Relative objective tolerance");
  cmd->add_option("--seed", opt.seed, "Seed for the default initial value");
}

FitConfig make_fit_config(const FitTuning& opt, const Window& window) {
  FitConfig config;
  config.max_outer_iters = opt.max_iter;
  config.rel_tol = opt.tol;
  config.seed = opt.seed;
  config.scale_floor = 1e-8 * window.diameter();
  config.validate();
  return config;
}

// ---------------------------------------------------------------------------

struct SimulateOpt {
  std::string scenario = "p5";
  std::size_t replicates = 1;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  std::string prefix = "pattern";
  std::size_t resolution = 0;
  std::size_t threads = 1;
  std::string scenario_out;
};

int cmd_simulate(const SimulateOpt& opt, std::ostream& out) {
  SimScenario scenario = resolve_scenario(opt.scenario);
  if (opt.resolution > 0) scenario.resolution = opt.resolution;
  scenario.validate();
  if (!opt.scenario_out.empty()) emit(opt.scenario_out, scenario_to_json(scenario), out);
  if (opt.replicates == 0) return kOk;
  std::filesystem::create_directories(opt.out_dir);
  std::vector<std::string> names(opt.replicates);
  for (std::size_t r = 0; r < opt.replicates; ++r) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "_%04zu.csv", r + 1);
    names[r] = (std::filesystem::path(opt.out_dir) / (opt.prefix + buf)).string();
    std::ofstream probe(names[r]);
    if (!probe) throw InputError("cannot write " + names[r]);
  }
  parallel_for(opt.replicates, resolve_threads(opt.threads), [&](std::size_t r) {
    SimScenario s = scenario;
    s.seed = derive_seed(opt.seed, r);
    write_pattern_csv(std::filesystem::path(names[r]), sample_mlgcp(s));
  });
  for (const auto& n : names) out << n << '\n';
  return kOk;
}

struct PcfOpt {
  DataOpt data;
  std::string out;
};

int cmd_pcf(const PcfOpt& opt, std::ostream& out) {
  if (opt.data.pattern.empty()) throw InputError("--input is required");
  const auto table = load_data(opt.data);
  if (opt.out.empty()) {
    write_pcf_csv(out, table.estimate, table.weights);
  } else {
    auto file = open_output(opt.out);
    write_pcf_csv(file, table.estimate, table.weights);
  }
  return kOk;
}

struct FitOpt {
  DataOpt data;
  FitTuning tuning;
  std::size_t q = 2;
  std::vector<double> lambdas{0.0};
  double xi = 1.0;
  std::string init;
  std::string out;
  std::string path_out;
  std::string log;
};

json fit_json(const FitResult& r) {
  return {{"lambda", r.lambda},
          {"xi", r.xi},
          {"q_objective", r.q},
          {"q_lambda", r.q_lambda},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"stalled_rows", r.stalled_rows},
          {"q_eff", q_eff(r.params.alpha)},
          {"params", json::parse(params_to_json(r.params))}};
}

int cmd_fit(const FitOpt& opt, std::ostream& out) {
  const auto table = load_data(opt.data);
  const auto& est = table.estimate;
  const FitConfig base = make_fit_config(opt.tuning, est.window);
  ModelParams init = opt.init.empty() ? default_init(est.types(), opt.q, est.window, base.seed)
                                      : read_params(opt.init);
  if (init.types() != est.types()) throw InputError("initial params have the wrong number of types");
  FitConfig config = base;
  config.record_blocks = !opt.log.empty();
  const DesignBlocks blocks(est, table.weights);
  const auto path = fit_path(blocks, init, opt.lambdas, opt.xi, config);

  emit(opt.out, params_to_json(path.back().params), out);
  if (!opt.path_out.empty()) {
    json doc = json::array();
    for (const auto& r : path) doc.push_back(fit_json(r));
    emit(opt.path_out, doc.dump(2), out);
  }
  if (!opt.log.empty()) {
    auto log = open_output(opt.log);
    log.precision(17);
    log << "lambda,iteration,block,q,q_lambda,step\n";
    for (const auto& r : path) {
      log << r.lambda << ",0,start," << r.trace.front() - Penalty{r.lambda, r.xi}.value(init.alpha)
          << ',' << r.trace.front() << ",0\n";
      for (const auto& s : r.steps) {
        if (s.block == "sweep") continue;
        log << r.lambda << ',' << s.iteration << ',' << s.block << ',' << s.q << ','
            << s.q_lambda << ',' << s.step << '\n';
      }
      init = r.params;
    }
  }
  return kOk;
}

struct CvOpt {
  DataOpt data;
  FitTuning tuning;
  std::vector<std::size_t> q_values;
  std::vector<double> lambdas;
  std::vector<double> xis{1.0};
  std::size_t folds = 8;
  std::size_t block = 5;
  std::uint64_t fold_seed = 1;
  bool cold_start = false;
  std::string out;
  std::string selection;
};

json cell_json(const CvCell& c) {
  return {{"q", c.q}, {"lambda", c.lambda}, {"cv", c.cv}, {"se", c.se}, {"q_eff", c.q_eff}};
}

int cmd_cv(const CvOpt& opt, std::ostream& out) {
  const auto table = load_data(opt.data);
  const auto& est = table.estimate;
  const auto q_values = opt.q_values.empty() ? default_q_grid(est.types()) : opt.q_values;
  const auto lambdas = opt.lambdas.empty() ? default_lambda_grid() : opt.lambdas;
  const auto folds = make_folds(est.types(), est.lags.size(), opt.folds, opt.block, opt.fold_seed);
  CvGridOptions options;
  options.fit = make_fit_config(opt.tuning, est.window);
  options.threads = resolve_threads(opt.data.threads);
  options.warm_start = !opt.cold_start;

  std::vector<CvGrid> grids;
  json picks = json::array();
  for (double xi : opt.xis) {
    grids.push_back(evaluate_cv_grid(est, table.weights, q_values, lambdas, xi, folds, options));
    const auto& g = grids.back();
    picks.push_back({{"xi", xi},
                     {"min", cell_json(g.cells[select_min(g).cell])},
                     {"one_se", cell_json(g.cells[select_one_se(g).cell])}});
  }
  if (opt.out.empty()) {
    write_cv_csv(out, grids);
  } else {
    auto file = open_output(opt.out);
    write_cv_csv(file, grids);
  }
  json doc = {{"folds", opt.folds}, {"block_length", opt.block}, {"selections", picks}};
  emit(opt.selection, doc.dump(2), out);
  return kOk;
}

struct SummarizeOpt {
  std::string params;
  std::vector<double> lags{0.0};
  std::string out;
};

int cmd_summarize(const SummarizeOpt& opt, std::ostream& out) {
  emit(opt.out, summarize_json(read_params(opt.params), opt.lags), out);
  return kOk;
}

struct StudyOpt {
  std::string scenario = "p5";
  std::size_t replicates = 20;
  std::string mode = "fixed";
  std::size_t q = 2;
  std::vector<std::size_t> q_grid;
  std::vector<double> lambdas;
  double xi = 1.0;
  std::size_t folds = 8;
  std::size_t block = 5;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::size_t resolution = 0;
  bool baseline = false;
  bool oracle = false;
  FitTuning tuning;
  std::string out;
};

int cmd_study(const StudyOpt& opt, std::ostream& out) {
  StudyConfig config;
  config.scenario = resolve_scenario(opt.scenario);
  if (opt.resolution > 0) config.scenario.resolution = opt.resolution;
  config.replicates = opt.replicates;
  config.mode = parse_selection_mode(opt.mode);
  config.q = opt.q;
  config.q_grid = opt.q_grid;
  if (!opt.lambdas.empty()) {
    config.lambdas = opt.lambdas;
  } else if (config.mode != SelectionMode::fixed) {
    config.lambdas = default_lambda_grid();
  }
  config.xi = opt.xi;
  config.folds = opt.folds;
  config.block = opt.block;
  config.seed = opt.seed;
  config.threads = resolve_threads(opt.threads);
  config.baseline = opt.baseline;
  config.oracle_estimator = opt.oracle;
  config.fit = make_fit_config(opt.tuning, config.scenario.window);
  const auto report = run_study(config);
  emit(opt.out, study_report_json(report, config), out);
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multivariate log Gaussian Cox process toolkit", "mlgcp"};
  app.require_subcommand(1);
  app.set_config("--config", "", "JSON file with option values");
  app.config_formatter(std::make_shared<JsonConfig>(&app));

  SimulateOpt sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate point patterns from a scenario");
  simulate->add_option("--scenario", sim.scenario, "p5, p10 or a scenario JSON file");
  simulate->add_option("--replicates", sim.replicates, "Number of patterns");
  simulate->add_option("--seed", sim.seed, "Master seed");
  simulate->add_option("--out-dir", sim.out_dir, "Output directory");
  simulate->add_option("--prefix", sim.prefix, "File name prefix");
  simulate->add_option("--resolution", sim.resolution, "Grid cells per axis (default 256)");
  simulate->add_option("--threads", sim.threads, "Worker threads (0 = all cores)");
  simulate->add_option("--scenario-out", sim.scenario_out, "Also write the scenario JSON here");

  PcfOpt pcf;
  auto* pcf_cmd = app.add_subcommand("pcf", "Estimate cross pair correlation functions");
  add_data(pcf_cmd, pcf.data);
  pcf_cmd->add_option("--out", pcf.out, "Output CSV (default stdout)");

  FitOpt fit_opt;
  auto* fit_cmd = app.add_subcommand("fit", "Fit the factor model by block descent");
  add_data(fit_cmd, fit_opt.data);
  add_tuning(fit_cmd, fit_opt.tuning);
  fit_cmd->add_option("--q", fit_opt.q, "Number of common fields");
  fit_cmd->add_option("--lambda", fit_opt.lambdas, "Penalty weights (ascending path)")
      ->delimiter(',');
  fit_cmd->add_option("--xi", fit_opt.xi, "Elastic-net mixing in [0, 1]");
  fit_cmd->add_option("--init", fit_opt.init, "Initial params JSON");
  fit_cmd->add_option("--out", fit_opt.out, "Params JSON of the last lambda (default stdout)");
  fit_cmd->add_option("--path-out", fit_opt.path_out, "JSON with every fit along the path");
  fit_cmd->add_option("--log", fit_opt.log, "Block-level objective log CSV");

  CvOpt cv;
  auto* cv_cmd = app.add_subcommand("cv", "Cross-validate over (q, lambda) for each xi");
  add_data(cv_cmd, cv.data);
  add_tuning(cv_cmd, cv.tuning);
  cv_cmd->add_option("--q", cv.q_values, "q grid (default 0..min(p, 10))")->delimiter(',');
  cv_cmd->add_option("--lambda", cv.lambdas, "Ascending lambda grid")->delimiter(',');
  cv_cmd->add_option("--xi", cv.xis, "Elastic-net mixing values")->delimiter(',');
  cv_cmd->add_option("--folds", cv.folds, "K");
  cv_cmd->add_option("--block", cv.block, "Block length b");
  cv_cmd->add_option("--fold-seed", cv.fold_seed, "Seed for the fold assignment");
  cv_cmd->add_flag("--cold-start", cv.cold_start, "Start every cell from the default init");
  cv_cmd->add_option("--out", cv.out, "CV surface CSV (default stdout)");
  cv_cmd->add_option("--selection", cv.selection, "Selection JSON (default stdout)");

  SummarizeOpt sum;
  auto* sum_cmd = app.add_subcommand("summarize", "Derived quantities of fitted params");
  sum_cmd->add_option("--params", sum.params, "Params JSON")->required();
  sum_cmd->add_option("--lags", sum.lags, "Lags for the proportion of variance")
      ->delimiter(',');
  sum_cmd->add_option("--out", sum.out, "Output JSON (default stdout)");

  StudyOpt study;
  auto* study_cmd = app.add_subcommand("study", "Simulation study: RMSE, objective, timing");
  study_cmd->add_option("--scenario", study.scenario, "p5, p10 or a scenario JSON file");
  study_cmd->add_option("--replicates", study.replicates, "Number of replicates");
  study_cmd->add_option("--mode", study.mode, "fixed, min or one-se");
  study_cmd->add_option("--q", study.q, "q for fixed mode");
  study_cmd->add_option("--q-grid", study.q_grid, "q grid for CV modes")->delimiter(',');
  study_cmd->add_option("--lambda", study.lambdas, "lambda (fixed) or grid (CV)")
      ->delimiter(',');
  study_cmd->add_option("--xi", study.xi, "Elastic-net mixing");
  study_cmd->add_option("--folds", study.folds, "K");
  study_cmd->add_option("--block", study.block, "Block length b");
  study_cmd->add_option("--seed", study.seed, "Master seed");
  study_cmd->add_option("--threads", study.threads, "Worker threads (0 = all cores)");
  study_cmd->add_option("--resolution", study.resolution, "Simulation grid cells per axis");
  study_cmd->add_flag("--baseline", study.baseline, "Also time the joint BFGS baseline");
  study_cmd->add_flag("--oracle-estimator", study.oracle, "Report the truth (testing)")
      ->group("");
  study_cmd->add_option("--max-iter", study.tuning.max_iter, "Maximum outer sweeps");
  study_cmd->add_option("--tol", study.tuning.tol, "Relative objective tolerance");
  study_cmd->add_option("--out", study.out, "Report JSON (default stdout)");

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kInputError;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim, out);
    if (pcf_cmd->parsed()) return cmd_pcf(pcf, out);
    if (fit_cmd->parsed()) return cmd_fit(fit_opt, out);
    if (cv_cmd->parsed()) return cmd_cv(cv, out);
    if (sum_cmd->parsed()) return cmd_summarize(sum, out);
    if (study_cmd->parsed()) return cmd_study(study, out);
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  }
  return kInputError;
}

}  // namespace mlgcp::cli
