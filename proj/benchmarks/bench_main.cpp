// Copyright 2026 The adaptive-hpo Authors
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

#include <vector>

#include "ahpo/clbench.hpp"
#include "ahpo/fanova.hpp"
#include "ahpo/samplers.hpp"

namespace {

using namespace ahpo;

hpspace::ConfigSpace bench_space() {
  return clbench::default_space(clbench::StrategyKind::der);
}

trials::RoundHistory random_round(const hpspace::ConfigSpace& space, std::size_t n) {
  trials::RoundHistory h(0, hpspace::Subspace::full(space));
  Rng rng(1);
  for (std::size_t i = 0; i < n; ++i) {
    trials::Trial t;
    t.trial_id = i;
    t.config = hpspace::sample_uniform(space, rng);
    t.objective = rng.uniform();
    h.append(t);
  }
  return h;
}

void BM_ForestFit(benchmark::State& state) {
  const auto space = bench_space();
  const std::vector<trials::RoundHistory> rounds = {
      random_round(space, static_cast<std::size_t>(state.range(0)))};
  const auto data = fanova::training_data(rounds, space);
  fanova::ForestOptions o;
  for (auto _ : state) benchmark::DoNotOptimize(fanova::fit_forest(data, o, Rng(3)));
}
BENCHMARK(BM_ForestFit)->Arg(30)->Arg(100)->Arg(300);

void BM_Importance(benchmark::State& state) {
  const auto space = bench_space();
  const std::vector<trials::RoundHistory> rounds = {
      random_round(space, static_cast<std::size_t>(state.range(0)))};
  fanova::ImportanceOptions o;
  for (auto _ : state) benchmark::DoNotOptimize(fanova::get_param_imp(rounds, space, o));
}
BENCHMARK(BM_Importance)->Arg(30)->Arg(100);

void BM_TpeAsk(benchmark::State& state) {
  const auto space = bench_space();
  const auto history = random_round(space, static_cast<std::size_t>(state.range(0)));
  const auto domain = hpspace::Subspace::full(space);
  samplers::SamplerSpec spec;
  Rng rng(5);
  for (auto _ : state) benchmark::DoNotOptimize(samplers::ask(spec, domain, history, rng));
}
BENCHMARK(BM_TpeAsk)->Arg(10)->Arg(30)->Arg(100);

void BM_MlpTrainStep(benchmark::State& state) {
  Rng rng(7);
  clbench::MLPModel model(2, 32, 32, 2);
  model.initialize(rng);
  clbench::LossBatch batch;
  batch.current = clbench::Split{2, {}, {}};
  const auto n = static_cast<std::size_t>(state.range(0));
  for (std::size_t i = 0; i < n; ++i) {
    const double row[] = {rng.normal(), rng.normal()};
    batch.current.add(row, static_cast<int>(rng.below(2)));
  }
  clbench::StrategyConfig strategy;
  std::vector<double> grad(model.num_params());
  for (auto _ : state) {
    clbench::strategy_loss(model, strategy, batch, nullptr, nullptr, &grad, nullptr);
    model.adamw_step(grad, {1e-3, 1e-4});
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_MlpTrainStep)->Arg(16)->Arg(32)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
