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

#include <benchmark/benchmark.h>

#include "mlgcp/design.hpp"
#include "mlgcp/optimizer.hpp"
#include "mlgcp/parallel.hpp"
#include "mlgcp/pcf.hpp"
#include "mlgcp/simulator.hpp"
#include "test_util.hpp"

namespace mlgcp {
namespace {

void BM_GaussianField(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_gaussian_field(Window{}, n, n, 0.05, ++seed));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n * n));
}
BENCHMARK(BM_GaussianField)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_SampleP5(benchmark::State& state) {
  auto sc = scenario_p5();
  for (auto _ : state) {
    ++sc.seed;
    benchmark::DoNotOptimize(sample_mlgcp(sc));
  }
}
BENCHMARK(BM_SampleP5)->Unit(benchmark::kMillisecond);

void BM_EstimatePcfP5(benchmark::State& state) {
  auto sc = scenario_p5();
  sc.seed = 1;
  const auto pattern = sample_mlgcp(sc);
  const auto threads = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(estimate_pcf(pattern, threads));
}
BENCHMARK(BM_EstimatePcfP5)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_ObjectiveP86(benchmark::State& state) {
  auto inst = testing::make_instance(86, 4, 0.3, 80'000);
  const auto init = default_init(86, 4, Window{}, 8);
  inst.blocks.set_scales(init.phi, init.psi);
  for (auto _ : state) benchmark::DoNotOptimize(objective_q(inst.blocks, init));
}
BENCHMARK(BM_ObjectiveP86)->Unit(benchmark::kMicrosecond);

void BM_GradientP86(benchmark::State& state) {
  auto inst = testing::make_instance(86, 4, 0.3, 80'000);
  const auto init = default_init(86, 4, Window{}, 8);
  for (auto _ : state) benchmark::DoNotOptimize(objective_gradient(inst.blocks, init));
}
BENCHMARK(BM_GradientP86)->Unit(benchmark::kMillisecond);

void BM_FitP5(benchmark::State& state) {
  auto inst = testing::make_instance(5, 2, 0.2, 12);
  const auto init = default_init(5, 2, Window{}, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit(inst.blocks, init, Penalty{0.01, 1.0}, FitConfig{}));
  }
}
BENCHMARK(BM_FitP5)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace mlgcp

BENCHMARK_MAIN();
