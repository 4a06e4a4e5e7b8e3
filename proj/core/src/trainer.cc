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

#include "pipesynth/trainer.hpp"

#include <algorithm>
#include <thread>

#include "pipesynth/errors.hpp"
#include "pipesynth/hashing.hpp"

namespace pipesynth {
namespace {

std::uint64_t EpisodeSeed(std::uint64_t seed, std::int64_t episode) {
  return SplitMix64(seed ^ SplitMix64(static_cast<std::uint64_t>(episode) + 0x5eedULL));
}

}  // namespace

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw ConfigError("replay buffer capacity must be >= 1");
}

void ReplayBuffer::Add(TrainingExample example) {
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(example));
}

std::vector<TrainingExample> ReplayBuffer::Sample(std::size_t n,
                                                  std::mt19937_64& rng) const {
  std::vector<TrainingExample> out;
  if (items_.empty()) return out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(items_[static_cast<std::size_t>(rng() % items_.size())]);
  }
  return out;
}

Dataset MakeSurrogateDataset(const Grammar& grammar, std::uint64_t seed,
                             const TaskSpec& task) {
  Dataset dataset;
  dataset.name = "surrogate:" + std::to_string(seed);
  dataset.task = task;
  dataset.meta = SurrogateMetaFeatures(seed);
  dataset.evaluator = std::make_shared<CachedEvaluator>(
      std::make_shared<SurrogateEvaluator>(SurrogateSpec{seed},
                                           PrimitiveRoles::FromGrammar(grammar)));
  return dataset;
}

Trainer::Trainer(const Game& game, ModelParams params, TrainerConfig config,
                 std::uint64_t seed)
    : game_(game),
      params_(std::move(params)),
      config_(config),
      seed_(seed),
      buffer_(config.buffer_capacity),
      rng_(SplitMix64(seed ^ 0x7a11ULL)) {
  if (config_.episodes_per_iteration < 1) throw ConfigError("episodes per iteration must be >= 1");
  if (config_.batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (config_.gradient_steps < 0) throw ConfigError("gradient steps must be >= 0");
  if (config_.workers < 1) throw ConfigError("workers must be >= 1");
}

EpisodeResult Trainer::RunOne(Dataset& dataset, std::int64_t episode_index) const {
  std::mt19937_64 rng(EpisodeSeed(seed_, episode_index));
  const GameState start = game_.InitialState(dataset.meta, dataset.task);
  return RunEpisode(game_, start, params_, *dataset.evaluator, config_.search, rng);
}

EpisodeResult Trainer::PlayEpisode(Dataset& dataset) {
  EpisodeResult result = RunOne(dataset, episodes_++);
  for (const auto& example : result.examples) buffer_.Add(example);
  return result;
}

std::pair<double, double> Trainer::Train(int steps) {
  if (!config_.training_enabled || buffer_.empty() || steps <= 0) return {0.0, 0.0};
  const auto frozen = buffer_.Sample(static_cast<std::size_t>(config_.batch_size), rng_);
  const double before = Loss(params_, frozen, config_.alpha);
  for (int step = 0; step < steps; ++step) {
    const auto batch = buffer_.Sample(static_cast<std::size_t>(config_.batch_size), rng_);
    const auto lg = ComputeGradient(params_, batch, config_.alpha);
    params_ = SgdStep(params_, lg.gradient, config_.learning_rate);
  }
  return {before, Loss(params_, frozen, config_.alpha)};
}

IterationReport Trainer::TrainIteration(std::span<Dataset> datasets) {
  if (datasets.empty()) throw ConfigError("training needs at least one dataset");
  IterationReport report;
  report.iteration = ++iteration_;
  report.episodes = config_.episodes_per_iteration;

  std::int64_t misses_before = 0;
  for (const auto& d : datasets) misses_before += d.evaluator->stats().misses;

  const std::int64_t first = episodes_;
  const int count = config_.episodes_per_iteration;
  std::vector<EpisodeResult> results(static_cast<std::size_t>(count));
  auto play = [&](int k) {
    Dataset& dataset = datasets[static_cast<std::size_t>((first + k) % static_cast<std::int64_t>(datasets.size()))];
    results[static_cast<std::size_t>(k)] = RunOne(dataset, first + k);
  };
  if (config_.workers == 1) {
    for (int k = 0; k < count; ++k) play(k);
  } else {
    std::vector<std::thread> threads;
    const int workers = std::min(config_.workers, count);
    for (int w = 0; w < workers; ++w) {
      threads.emplace_back([&, w] {
        for (int k = w; k < count; k += workers) play(k);
      });
    }
    for (auto& t : threads) t.join();
  }
  episodes_ += count;

  double total_e = 0.0;
  for (auto& result : results) {
    total_e += result.e;
    report.stats += result.stats;
    for (auto& example : result.examples) buffer_.Add(std::move(example));
  }
  report.mean_e = total_e / count;

  std::int64_t misses_after = 0;
  for (const auto& d : datasets) {
    misses_after += d.evaluator->stats().misses;
    if (auto best = d.evaluator->best()) report.best_e = std::max(report.best_e, best->score);
  }
  report.evaluations = misses_after - misses_before;

  std::tie(report.loss_before, report.loss_after) = Train(config_.gradient_steps);
  return report;
}

Checkpoint Pretrain(const Game& game, std::span<Dataset> datasets,
                    ModelParams initial, const TrainerConfig& config,
                    std::uint64_t seed, const PretrainOptions& options,
                    const std::function<void(const IterationReport&)>& on_report) {
  if (datasets.size() < 2) throw ConfigError("pretraining needs at least two datasets");
  if (options.iterations < 0) throw ConfigError("iterations must be >= 0");
  Trainer trainer(game, std::move(initial), config, seed);
  for (int i = 0; i < options.iterations; ++i) {
    const auto report = trainer.TrainIteration(datasets);
    if (on_report) on_report(report);
    if (options.checkpoint_path && options.checkpoint_every > 0 &&
        (i + 1) % options.checkpoint_every == 0) {
      SaveCheckpoint(MakeCheckpoint(game, trainer.params(),
                                    static_cast<std::uint64_t>(trainer.iteration())),
                     *options.checkpoint_path);
    }
  }
  Checkpoint checkpoint = MakeCheckpoint(
      game, trainer.params(), static_cast<std::uint64_t>(trainer.iteration()));
  if (options.checkpoint_path) SaveCheckpoint(checkpoint, *options.checkpoint_path);
  return checkpoint;
}

SynthesisResult Synthesize(const Game& game, Dataset& dataset,
                           ModelParams params, const Budget& budget,
                           const TrainerConfig& config, std::uint64_t seed) {
  if (!budget.episodes && !budget.evaluations && !budget.cpu_seconds) {
    throw ConfigError("synthesis needs an episode, evaluation or time budget");
  }
  if ((budget.episodes && *budget.episodes <= 0) ||
      (budget.evaluations && *budget.evaluations <= 0) ||
      (budget.cpu_seconds && *budget.cpu_seconds <= 0.0)) {
    throw ConfigError("budget must be positive");
  }
  const double cpu_start = ProcessCpuSeconds();
  const std::int64_t misses_start = dataset.evaluator->stats().misses;
  auto evaluations = [&] { return dataset.evaluator->stats().misses - misses_start; };
  std::int64_t stalled = 0;
  auto exhausted = [&](std::int64_t episodes) {
    if (budget.stall_episodes > 0 && stalled >= budget.stall_episodes) return true;
    if (budget.episodes && episodes >= *budget.episodes) return true;
    if (budget.evaluations && evaluations() >= *budget.evaluations) return true;
    if (budget.cpu_seconds && ProcessCpuSeconds() - cpu_start >= *budget.cpu_seconds) return true;
    if (budget.target_score) {
      auto best = dataset.evaluator->best();
      if (best && best->score >= *budget.target_score) return true;
    }
    return false;
  };

  Trainer trainer(game, std::move(params), config, seed);
  SynthesisResult result;
  while (!exhausted(result.episodes)) {
    const std::int64_t before = evaluations();
    EpisodeResult episode = trainer.PlayEpisode(dataset);
    stalled = evaluations() == before ? stalled + 1 : 0;
    result.stats += episode.stats;
    EpisodeLog log;
    log.episode = result.episodes;
    log.moves = std::move(episode.moves);
    log.pipeline = std::move(episode.pipeline);
    log.e = episode.e;
    log.status = episode.status;
    log.evaluations = evaluations();
    result.provenance.push_back(std::move(log));
    ++result.episodes;
    if (config.training_enabled && result.episodes % config.episodes_per_iteration == 0) {
      trainer.Train(config.gradient_steps);
    }
  }

  result.evaluations = evaluations();
  for (const auto& point : dataset.evaluator->history()) {
    if (point.evaluations > misses_start) {
      BestSoFar shifted = point;
      shifted.evaluations -= misses_start;
      shifted.cpu_seconds -= cpu_start;
      result.best_series.push_back(std::move(shifted));
    }
  }
  if (auto best = dataset.evaluator->best()) {
    result.best_pipeline = best->pipeline;
    result.best_e = best->score;
    result.evaluations_to_best = std::max<std::int64_t>(0, best->evaluations - misses_start);
  }
  if (budget.target_score) {
    if (auto reached = dataset.evaluator->EvaluationsToReach(*budget.target_score)) {
      result.evaluations_to_target = std::max<std::int64_t>(0, *reached - misses_start);
    }
  }
  result.cpu_seconds = ProcessCpuSeconds() - cpu_start;
  return result;
}

}  // namespace pipesynth
