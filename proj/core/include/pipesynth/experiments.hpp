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


#ifndef PIPESYNTH_EXPERIMENTS_H_
#define PIPESYNTH_EXPERIMENTS_H_

// Experiment drivers behind the command-line tool. Each returns a JSON
// report; wall/CPU time lives under "timing" keys and the creation time
// under "generated_at", so StripVolatile() of two runs with the same seed
// compares equal.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pipesynth/game.hpp"
#include "pipesynth/trainer.hpp"

namespace pipesynth {

inline constexpr int kReportVersion = 1;
inline constexpr const char* kExecutorEnvVar = "PIPESYNTH_EXECUTOR_CMD";

struct CommonOptions {
  std::filesystem::path grammar;
  std::string evaluator = "surrogate";  // surrogate | external
  // Executor argv as one command line; empty falls back to kExecutorEnvVar.
  std::string executor_cmd;
  std::optional<std::string> task;  // default: classification
  std::uint64_t seed = 0;
  int workers = 1;
  GameConfig game;
  TrainerConfig trainer;
  // JSON-lines run log; empty disables it.
  std::filesystem::path run_log;
};

struct SynthOptions {
  CommonOptions common;
  std::string dataset;
  std::optional<std::filesystem::path> checkpoint;
  Budget budget;
  // Provenance log (JSON lines, one episode per line); empty disables it.
  std::filesystem::path provenance;
};

struct CompareOptions {
  CommonOptions common;
  std::vector<std::string> datasets;
  Budget budget;
};

struct AblateOptions {
  CommonOptions common;
  std::vector<std::uint64_t> seeds;
  double target_fraction = 0.99;
  std::int64_t evaluation_budget = 2000;
  int repetitions = 20;
  // Optional starting point for the trained-network mode.
  std::optional<std::filesystem::path> checkpoint;
};

struct PretrainCommandOptions {
  CommonOptions common;
  std::vector<std::string> datasets;
  int iterations = 10;
  int checkpoint_every = 0;
  std::filesystem::path checkpoint_out;
};

struct WarmstartOptions {
  CommonOptions common;
  std::string dataset;
  std::filesystem::path checkpoint;
  // Target = fraction * brute-force optimum (surrogate datasets only) unless
  // an absolute target score is given.
  double target_fraction = 0.95;
  std::optional<double> target_score;
  std::int64_t evaluation_budget = 2000;
  int repetitions = 20;
};

struct GrammarStatsOptions {
  std::filesystem::path grammar;
  int max_terminals = 8;
  std::size_t limit = 100000;
};

struct SynthOutcome {
  nlohmann::json report;
  Pipeline pipeline;
  double e = 0.0;
};

SynthOutcome RunSynth(const SynthOptions& options);
nlohmann::json RunCompareGrammar(const CompareOptions& options);
// Paired rows of a compare-grammar report as CSV text.
std::string CompareGrammarCsv(const nlohmann::json& report);
nlohmann::json RunAblate(const AblateOptions& options);
nlohmann::json RunPretrain(const PretrainCommandOptions& options);
nlohmann::json RunWarmstartEval(const WarmstartOptions& options);
nlohmann::json RunGrammarStats(const GrammarStatsOptions& options);

// Copy of `report` without "generated_at" and "timing" members at any depth.
nlohmann::json StripVolatile(const nlohmann::json& report);

// Seed of run `index` within an experiment; stable across platforms.
std::uint64_t DeriveSeed(std::uint64_t master, std::string_view label,
                         std::uint64_t index);

double Median(std::vector<double> values);

}  // namespace pipesynth

#endif  // PIPESYNTH_EXPERIMENTS_H_
