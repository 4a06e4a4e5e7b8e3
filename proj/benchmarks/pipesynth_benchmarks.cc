// Copyright 2026 The pipesynth Authors.
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


// Microbenchmarks for the hot paths: edge scoring, the recurrent forward
// pass, single search simulations, surrogate scoring and enumeration.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "pipesynth/checkpoint.hpp"
#include "pipesynth/evaluator.hpp"
#include "pipesynth/game.hpp"
#include "pipesynth/grammar.hpp"
#include "pipesynth/mcts.hpp"
#include "pipesynth/network.hpp"
#include "pipesynth/trainer.hpp"

namespace pipesynth {
namespace {

std::shared_ptr<const Grammar> Classification() {
  static const auto grammar = std::make_shared<const Grammar>(Grammar::Load(
      std::filesystem::path(PIPESYNTH_BENCH_GRAMMAR_DIR) / "classification.grammar"));
  return grammar;
}

void BM_Ucb(benchmark::State& state) {
  std::vector<Edge> edges(64);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& e : edges) {
    e.prior = u(rng);
    e.visits = static_cast<std::int64_t>(rng() % 20);
    e.total_value = u(rng) * static_cast<double>(e.visits);
  }
  for (auto _ : state) {
    double best = -1.0;
    for (const auto& e : edges) best = std::max(best, Ucb(e, 500, 6.0));
    benchmark::DoNotOptimize(best);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(edges.size()));
}
BENCHMARK(BM_Ucb);

// Arg: number of moves already applied to the encoded state.
void BM_Forward(benchmark::State& state) {
  const Game game(Classification(), GameConfig{});
  const ModelParams params = ModelParams::Initial(ShapeFor(game), 3);
  Dataset dataset = MakeSurrogateDataset(*Classification(), 3, TaskSpec::Classification());
  GameState s = game.InitialState(dataset.meta, dataset.task);
  for (int i = 0; i < state.range(0) && !game.IsTerminal(s); ++i)
    s = game.Step(s, game.LegalActions(s).back());
  const auto encoded = game.Encode(s);
  const auto mask = game.LegalMask(s);
  for (auto _ : state) benchmark::DoNotOptimize(Forward(params, encoded, mask));
}
BENCHMARK(BM_Forward)->Arg(0)->Arg(3);

void BM_Simulate(benchmark::State& state) {
  const Game game(Classification(), GameConfig{});
  const ModelParams params = ModelParams::Initial(ShapeFor(game), 5);
  Dataset dataset = MakeSurrogateDataset(*Classification(), 5, TaskSpec::Classification());
  std::mt19937_64 rng(5);
  SearchConfig config;
  Search search(game, params, *dataset.evaluator, config, rng);
  const GameState start = game.InitialState(dataset.meta, dataset.task);
  search.Reset(start);
  int done = 0;
  for (auto _ : state) {
    search.Simulate();
    if (++done == 512) {
      state.PauseTiming();
      search.Reset(start);
      done = 0;
      state.ResumeTiming();
    }
  }
}
BENCHMARK(BM_Simulate);

void BM_SurrogateEvaluate(benchmark::State& state) {
  const SurrogateSpec spec{7};
  const auto roles = PrimitiveRoles::FromGrammar(*Classification());
  const Pipeline pipeline = {"SkImputer", "OneHotEncoder", "PCA", "GaussianNB"};
  for (auto _ : state) benchmark::DoNotOptimize(SurrogateEvaluate(spec, roles, pipeline));
}
BENCHMARK(BM_SurrogateEvaluate);

// Arg: terminal cap.
void BM_Enumerate(benchmark::State& state) {
  const auto grammar = Classification();
  std::size_t n = 0;
  for (auto _ : state) {
    n = EnumeratePipelines(*grammar, static_cast<int>(state.range(0))).size();
    benchmark::DoNotOptimize(n);
  }
  state.counters["pipelines"] = static_cast<double>(n);
}
BENCHMARK(BM_Enumerate)->Arg(3)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace pipesynth

BENCHMARK_MAIN();
