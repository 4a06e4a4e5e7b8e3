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

#ifndef PIPESYNTH_TRAINER_H_
#define PIPESYNTH_TRAINER_H_

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pipesynth/checkpoint.hpp"
#include "pipesynth/evaluator.hpp"
#include "pipesynth/game.hpp"
#include "pipesynth/mcts.hpp"
#include "pipesynth/network.hpp"

namespace pipesynth {

// Fixed-capacity FIFO of training examples.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void Add(TrainingExample example);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }
  // 0 is the oldest retained example.
  const TrainingExample& at(std::size_t i) const { return items_.at(i); }
  // Uniform draws with replacement.
  std::vector<TrainingExample> Sample(std::size_t n, std::mt19937_64& rng) const;

 private:
  std::size_t capacity_;
  std::deque<TrainingExample> items_;
};

struct TrainerConfig {
  int episodes_per_iteration = 16;
  int gradient_steps = 64;
  int batch_size = 32;
  double learning_rate = 0.01;
  double alpha = 1e-4;
  std::size_t buffer_capacity = 50000;
  // Parallel episodes inside TrainIteration; 1 keeps runs bit-reproducible.
  int workers = 1;
  // When false the parameters are never updated (uniform-prior ablation).
  bool training_enabled = true;
  SearchConfig search;
};

// A dataset the engine can play on: its identity, meta-features and a
// cached evaluator shared by every episode on it.
struct Dataset {
  std::string name;
  TaskSpec task;
  MetaFeatures meta{};
  std::shared_ptr<CachedEvaluator> evaluator;
};

Dataset MakeSurrogateDataset(const Grammar& grammar, std::uint64_t seed,
                             const TaskSpec& task);

struct IterationReport {
  std::int64_t iteration = 0;
  int episodes = 0;
  double mean_e = 0.0;
  double best_e = 0.0;
  double loss_before = 0.0;
  double loss_after = 0.0;
  std::int64_t evaluations = 0;
  SearchStats stats;
};

// Self-play trainer: owns the current parameter snapshot and the replay
// buffer. Episode i of the trainer uses its own generator derived from
// (seed, i), so results do not depend on the worker count except through
// cache-hit timing.
class Trainer {
 public:
  Trainer(const Game& game, ModelParams params, TrainerConfig config,
          std::uint64_t seed);

  // Plays E episodes round-robin over `datasets`, appends their examples
  // and takes G gradient steps on uniform mini-batches.
  IterationReport TrainIteration(std::span<Dataset> datasets);

  // One self-play episode with the current parameters; examples go to the
  // buffer.
  EpisodeResult PlayEpisode(Dataset& dataset);

  // G gradient steps; returns loss on a frozen sample before and after.
  std::pair<double, double> Train(int steps);

  const ModelParams& params() const { return params_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  const TrainerConfig& config() const { return config_; }
  std::int64_t iteration() const { return iteration_; }
  std::int64_t episodes_played() const { return episodes_; }

 private:
  EpisodeResult RunOne(Dataset& dataset, std::int64_t episode_index) const;

  const Game& game_;
  ModelParams params_;
  TrainerConfig config_;
  std::uint64_t seed_;
  ReplayBuffer buffer_;
  std::mt19937_64 rng_;
  std::int64_t iteration_ = 0;
  std::int64_t episodes_ = 0;
};

struct PretrainOptions {
  int iterations = 10;
  // Write a checkpoint every k iterations (0: only at the end).
  int checkpoint_every = 0;
  std::optional<std::filesystem::path> checkpoint_path;
};

// Interleaved self-play over >= 2 datasets. Returns (and optionally writes)
// the final checkpoint. Throws ConfigError with fewer than two datasets.
Checkpoint Pretrain(const Game& game, std::span<Dataset> datasets,
                    ModelParams initial, const TrainerConfig& config,
                    std::uint64_t seed, const PretrainOptions& options,
                    const std::function<void(const IterationReport&)>& on_report = {});

struct Budget {
  std::optional<std::int64_t> episodes;
  std::optional<std::int64_t> evaluations;
  std::optional<double> cpu_seconds;
  // Stop as soon as an evaluation reaches this score.
  std::optional<double> target_score;
  // Stop after this many consecutive episodes without a new underlying
  // evaluation (the reachable language is exhausted). 0 disables.
  std::int64_t stall_episodes = 500;
};

struct EpisodeLog {
  std::int64_t episode = 0;
  std::vector<MoveRecord> moves;
  Pipeline pipeline;
  double e = 0.0;
  EvalStatus status = EvalStatus::kOk;
  // Underlying evaluations made so far, after this episode.
  std::int64_t evaluations = 0;
};

struct SynthesisResult {
  Pipeline best_pipeline;
  double best_e = 0.0;
  // Evaluations made when the best pipeline was first evaluated.
  std::int64_t evaluations_to_best = 0;
  std::optional<std::int64_t> evaluations_to_target;
  std::int64_t episodes = 0;
  std::int64_t evaluations = 0;
  std::vector<EpisodeLog> provenance;
  std::vector<BestSoFar> best_series;
  SearchStats stats;
  double cpu_seconds = 0.0;
};

// Runs search episodes on `dataset` until the budget is exhausted, training
// online every `episodes_per_iteration` episodes when enabled. The best
// pipeline is the best one evaluated anywhere in the searches. Throws
// ConfigError on an empty or zero budget.
SynthesisResult Synthesize(const Game& game, Dataset& dataset,
                           ModelParams params, const Budget& budget,
                           const TrainerConfig& config, std::uint64_t seed);

}  // namespace pipesynth

#endif  // PIPESYNTH_TRAINER_H_
