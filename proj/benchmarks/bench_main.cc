// Copyright 2026 The modecompose Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include "modecompose/datasets.h"
#include "modecompose/denoiser.h"
#include "modecompose/gmm.h"
#include "modecompose/metrics.h"
#include "modecompose/mode_discovery.h"
#include "modecompose/sampler.h"

namespace modecompose {
namespace {

const NoiseSchedule& Schedule() {
  static const NoiseSchedule s = NoiseSchedule::Linear(1000);
  return s;
}

void BM_OracleScore(benchmark::State& state) {
  const GmmOracle oracle(WorldDensity(HierarchicalWorld()), Schedule());
  Rng rng(1);
  const Matrix x = StandardNormal(state.range(0), 2, rng);
  for (auto _ : state) benchmark::DoNotOptimize(oracle.ScoreBatch(x, 200, Conditioning::Null()));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_OracleScore)->Arg(64)->Arg(1024);

void BM_DenoiserForward(benchmark::State& state) {
  // Desk-scale ColorMNIST shape: 16x16x3 inputs, 30 seen classes.
  DenoiserArch arch{768, 30, static_cast<int>(state.range(1)), 3, 32, OutputHead::kX0, 3.0};
  const ToyDenoiser model(arch, Schedule(), 1);
  Rng rng(2);
  const Matrix x = StandardNormal(state.range(0), 768, rng);
  for (auto _ : state) benchmark::DoNotOptimize(model.EpsBatch(x, 300, Conditioning::Class(4)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DenoiserForward)->Args({16, 256})->Args({128, 256})->Args({128, 512});

void BM_KnnPrecisionRecall(benchmark::State& state) {
  Rng rng(3);
  const Matrix gen = StandardNormal(state.range(0), 768, rng);
  const Matrix ref = StandardNormal(state.range(0), 768, rng);
  for (auto _ : state) benchmark::DoNotOptimize(KnnPrecisionRecall(gen, ref, 3));
}
BENCHMARK(BM_KnnPrecisionRecall)->Arg(160)->Arg(640);

void BM_Frechet(benchmark::State& state) {
  Rng rng(4);
  const Matrix gen = StandardNormal(160, state.range(0), rng);
  const Matrix ref = StandardNormal(100, state.range(0), rng);
  for (auto _ : state) benchmark::DoNotOptimize(FrechetGaussian(gen, ref));
}
BENCHMARK(BM_Frechet)->Arg(64)->Arg(768);

void BM_DiscoverOracle(benchmark::State& state) {
  const GmmWorldSpec world = ThreeModeWorld();
  const GmmOracle oracle(WorldDensity(world), Schedule());
  AscentConfig cfg;
  cfg.n_per_t = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(DiscoverPrototypes(oracle, world.components[0].mean, cfg));
}
BENCHMARK(BM_DiscoverOracle)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_DdimUnconditional(benchmark::State& state) {
  const GmmOracle oracle(WorldDensity(ThreeModeWorld()), Schedule());
  GuidanceConfig cfg;
  cfg.n_samples = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(SampleUnconditional(oracle, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DdimUnconditional)->Arg(16)->Arg(256);

}  // namespace
}  // namespace modecompose

BENCHMARK_MAIN();
