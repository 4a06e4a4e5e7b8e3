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

#ifndef PIPESYNTH_EVALUATOR_H_
#define PIPESYNTH_EVALUATOR_H_

// Pipeline scoring: the surrogate benchmark, its brute-force optimum, a
// memoizing cache and the dataset manifest used by the external executor.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pipesynth/grammar.hpp"
#include "pipesynth/task.hpp"

namespace pipesynth {

enum class EvalStatus { kOk, kInvalidPipeline, kExecutorError };

std::string_view EvalStatusName(EvalStatus status);

struct EvaluationResult {
  // Always in [0, 1]; 0 whenever status != kOk.
  double score = 0.0;
  EvalStatus status = EvalStatus::kOk;
  std::string message;
  std::chrono::duration<double> wall_time{0.0};

  static EvaluationResult Ok(double score);
  static EvaluationResult Invalid(std::string message);
  static EvaluationResult ExecutorFailure(std::string message);
};

class PipelineEvaluator {
 public:
  virtual ~PipelineEvaluator() = default;
  virtual EvaluationResult Evaluate(const Pipeline& pipeline) = 0;
  // Stable name of the evaluated dataset/backend, part of the cache key.
  virtual std::string identity() const = 0;
};

enum class PrimitiveRole { kCleaner, kTransform, kEstimator };

// Role of each terminal. FromGrammar tags terminals reachable from <DC> as
// cleaners, terminals reachable from <DT> as transforms and every other
// terminal as an estimator.
class PrimitiveRoles {
 public:
  static PrimitiveRoles FromGrammar(const Grammar& grammar);
  void Set(const std::string& name, PrimitiveRole role) { roles_[name] = role; }
  std::optional<PrimitiveRole> Find(const std::string& name) const;
  std::vector<std::string> Names(PrimitiveRole role) const;

 private:
  std::map<std::string, PrimitiveRole> roles_;
};

// A synthetic dataset identified by its seed. Terminal weights are
//   w(t) = (splitmix64(seed ^ fnv1a64(t)) mod 1e6) / 1e6.
struct SurrogateSpec {
  std::uint64_t seed = 0;
  double Weight(std::string_view terminal) const;
};

inline constexpr double kEstimatorWeight = 0.5;
inline constexpr double kTransformWeight = 0.3;
inline constexpr double kCleanerWeight = 0.2;
inline constexpr double kLengthPenalty = 0.02;

// Valid pipelines (one estimator, in last position, no cleaner after a
// transform) score
//   clamp(0.5 w(est) + 0.3 mean w(transforms) + 0.2 mean w(cleaners)
//         - 0.02 (len - 1), 0, 1)
// with the mean of an empty set taken as 0. Anything else is
// invalid_pipeline with score 0.
EvaluationResult SurrogateEvaluate(const SurrogateSpec& spec,
                                   const PrimitiveRoles& roles,
                                   const Pipeline& pipeline);

class SurrogateEvaluator : public PipelineEvaluator {
 public:
  SurrogateEvaluator(SurrogateSpec spec, PrimitiveRoles roles)
      : spec_(spec), roles_(std::move(roles)) {}
  EvaluationResult Evaluate(const Pipeline& pipeline) override {
    return SurrogateEvaluate(spec_, roles_, pipeline);
  }
  std::string identity() const override;
  const SurrogateSpec& spec() const { return spec_; }

 private:
  SurrogateSpec spec_;
  PrimitiveRoles roles_;
};

struct OracleResult {
  Pipeline pipeline;
  double score = 0.0;
  std::size_t language_size = 0;
};

// Exhaustive argmax of the surrogate over the capped language; ties go to the
// lexicographically smallest pipeline. Throws EnumerationOverflow past
// `limit` pipelines.
OracleResult BruteForceBest(const SurrogateSpec& spec, const Grammar& grammar,
                            int max_terminals, std::size_t limit = 100000);

struct CacheStats {
  std::int64_t calls = 0;
  std::int64_t hits = 0;
  std::int64_t misses = 0;

  double hit_ratio() const {
    return calls == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(calls);
  }
};

// A new best score, with the number of underlying evaluations made when it
// was found.
struct BestSoFar {
  Pipeline pipeline;
  double score = 0.0;
  std::int64_t evaluations = 0;
  double cpu_seconds = 0.0;
};

// Memoizes an evaluator by pipeline. Concurrent callers asking for the same
// pipeline share one underlying evaluation. Also tracks the best-so-far
// series over underlying evaluations.
class CachedEvaluator : public PipelineEvaluator {
 public:
  explicit CachedEvaluator(std::shared_ptr<PipelineEvaluator> inner);

  EvaluationResult Evaluate(const Pipeline& pipeline) override;
  std::string identity() const override { return inner_->identity(); }

  CacheStats stats() const;
  std::optional<BestSoFar> best() const;
  std::vector<BestSoFar> history() const;
  // Underlying evaluations made before the first score >= target, counting
  // the one that reached it; nullopt if never reached.
  std::optional<std::int64_t> EvaluationsToReach(double target) const;
  std::int64_t failures() const;

 private:
  std::shared_ptr<PipelineEvaluator> inner_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, std::shared_future<EvaluationResult>> cache_;
  CacheStats stats_;
  std::int64_t failures_ = 0;
  std::vector<BestSoFar> history_;
};

// CPU time consumed by this process, in seconds.
double ProcessCpuSeconds();

// One entry of a dataset manifest (a JSON array of these objects).
struct DatasetEntry {
  std::string name;
  std::filesystem::path path;
  TaskSpec task;
  std::string target_column;
};

// Relative paths are resolved against the manifest's directory. Throws
// ConfigError on malformed manifests.
std::vector<DatasetEntry> LoadManifest(const std::filesystem::path& path);

}  // namespace pipesynth

#endif  // PIPESYNTH_EVALUATOR_H_
