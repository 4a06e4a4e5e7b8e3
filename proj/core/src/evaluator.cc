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

#include "pipesynth/evaluator.hpp"

#include <algorithm>
#include <ctime>
#include <fstream>

#include "json.hpp"
#include "pipesynth/errors.hpp"
#include "pipesynth/hashing.hpp"

namespace pipesynth {
double ProcessCpuSeconds() {
  timespec ts{};
  clock_gettime(CLOCK_PROCESS_CPUTIME_ID, &ts);
  return static_cast<double>(ts.tv_sec) + 1e-9 * static_cast<double>(ts.tv_nsec);
}

std::string_view EvalStatusName(EvalStatus status) {
  switch (status) {
    case EvalStatus::kOk:
      return "ok";
    case EvalStatus::kInvalidPipeline:
      return "invalid_pipeline";
    case EvalStatus::kExecutorError:
      return "executor_error";
  }
  return "unknown";
}

EvaluationResult EvaluationResult::Ok(double score) {
  EvaluationResult r;
  r.score = std::clamp(score, 0.0, 1.0);
  return r;
}

EvaluationResult EvaluationResult::Invalid(std::string message) {
  EvaluationResult r;
  r.status = EvalStatus::kInvalidPipeline;
  r.message = std::move(message);
  return r;
}

EvaluationResult EvaluationResult::ExecutorFailure(std::string message) {
  EvaluationResult r;
  r.status = EvalStatus::kExecutorError;
  r.message = std::move(message);
  return r;
}

PrimitiveRoles PrimitiveRoles::FromGrammar(const Grammar& grammar) {
  PrimitiveRoles roles;
  for (const auto& t : grammar.terminals()) roles.Set(t, PrimitiveRole::kEstimator);
  if (auto dt = grammar.FindNonterminal("DT")) {
    for (Symbol s : grammar.ReachableTerminals(*dt)) {
      roles.Set(grammar.name(s), PrimitiveRole::kTransform);
    }
  }
  if (auto dc = grammar.FindNonterminal("DC")) {
    for (Symbol s : grammar.ReachableTerminals(*dc)) {
      roles.Set(grammar.name(s), PrimitiveRole::kCleaner);
    }
  }
  return roles;
}

std::optional<PrimitiveRole> PrimitiveRoles::Find(const std::string& name) const {
  auto it = roles_.find(name);
  if (it == roles_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> PrimitiveRoles::Names(PrimitiveRole role) const {
  std::vector<std::string> out;
  for (const auto& [name, r] : roles_) {
    if (r == role) out.push_back(name);
  }
  return out;
}

double SurrogateSpec::Weight(std::string_view terminal) const {
  return HashToUnit(seed, terminal);
}

EvaluationResult SurrogateEvaluate(const SurrogateSpec& spec,
                                   const PrimitiveRoles& roles,
                                   const Pipeline& pipeline) {
  if (pipeline.empty()) return EvaluationResult::Invalid("empty pipeline");
  int estimators = 0;
  bool seen_transform = false;
  double transform_sum = 0.0;
  double cleaner_sum = 0.0;
  int transforms = 0;
  int cleaners = 0;
  for (std::size_t i = 0; i < pipeline.size(); ++i) {
    const auto role = roles.Find(pipeline[i]);
    if (!role) return EvaluationResult::Invalid("unknown primitive " + pipeline[i]);
    switch (*role) {
      case PrimitiveRole::kEstimator:
        ++estimators;
        if (i + 1 != pipeline.size()) {
          return EvaluationResult::Invalid("estimator " + pipeline[i] +
                                           " is not the last primitive");
        }
        break;
      case PrimitiveRole::kTransform:
        seen_transform = true;
        transform_sum += spec.Weight(pipeline[i]);
        ++transforms;
        break;
      case PrimitiveRole::kCleaner:
        if (seen_transform) {
          return EvaluationResult::Invalid("cleaner " + pipeline[i] +
                                           " follows a transform");
        }
        cleaner_sum += spec.Weight(pipeline[i]);
        ++cleaners;
        break;
    }
  }
  if (estimators != 1) {
    return EvaluationResult::Invalid("pipeline must end in exactly one estimator");
  }
  const double mean_transform = transforms ? transform_sum / transforms : 0.0;
  const double mean_cleaner = cleaners ? cleaner_sum / cleaners : 0.0;
  const double e = kEstimatorWeight * spec.Weight(pipeline.back()) +
                   kTransformWeight * mean_transform +
                   kCleanerWeight * mean_cleaner -
                   kLengthPenalty * static_cast<double>(pipeline.size() - 1);
  return EvaluationResult::Ok(e);
}

std::string SurrogateEvaluator::identity() const {
  return "surrogate:" + std::to_string(spec_.seed);
}

OracleResult BruteForceBest(const SurrogateSpec& spec, const Grammar& grammar,
                            int max_terminals, std::size_t limit) {
  const auto language = EnumeratePipelines(grammar, max_terminals, limit);
  const auto roles = PrimitiveRoles::FromGrammar(grammar);
  OracleResult best;
  best.language_size = language.size();
  bool found = false;
  for (const auto& entry : language) {
    const double e = SurrogateEvaluate(spec, roles, entry.pipeline).score;
    if (!found || e > best.score ||
        (e == best.score && entry.pipeline < best.pipeline)) {
      best.pipeline = entry.pipeline;
      best.score = e;
      found = true;
    }
  }
  return best;
}

CachedEvaluator::CachedEvaluator(std::shared_ptr<PipelineEvaluator> inner)
    : inner_(std::move(inner)) {}

EvaluationResult CachedEvaluator::Evaluate(const Pipeline& pipeline) {
  const std::string key = JoinPipeline(pipeline);
  std::promise<EvaluationResult> promise;
  std::shared_future<EvaluationResult> future;
  {
    std::lock_guard lock(mutex_);
    ++stats_.calls;
    auto it = cache_.find(key);
    if (it != cache_.end()) {
      ++stats_.hits;
      future = it->second;
    } else {
      ++stats_.misses;
      cache_.emplace(key, promise.get_future().share());
    }
  }
  if (future.valid()) return future.get();

  const auto start = std::chrono::steady_clock::now();
  EvaluationResult result;
  try {
    result = inner_->Evaluate(pipeline);
  } catch (...) {
    promise.set_exception(std::current_exception());
    throw;
  }
  result.wall_time = std::chrono::steady_clock::now() - start;
  promise.set_value(result);

  std::lock_guard lock(mutex_);
  if (result.status == EvalStatus::kExecutorError) ++failures_;
  if (history_.empty() || result.score > history_.back().score) {
    history_.push_back({pipeline, result.score, stats_.misses, ProcessCpuSeconds()});
  }
  return result;
}

CacheStats CachedEvaluator::stats() const {
  std::lock_guard lock(mutex_);
  return stats_;
}

std::optional<BestSoFar> CachedEvaluator::best() const {
  std::lock_guard lock(mutex_);
  if (history_.empty()) return std::nullopt;
  return history_.back();
}

std::vector<BestSoFar> CachedEvaluator::history() const {
  std::lock_guard lock(mutex_);
  return history_;
}

std::optional<std::int64_t> CachedEvaluator::EvaluationsToReach(double target) const {
  std::lock_guard lock(mutex_);
  for (const auto& point : history_) {
    if (point.score >= target) return point.evaluations;
  }
  return std::nullopt;
}

std::int64_t CachedEvaluator::failures() const {
  std::lock_guard lock(mutex_);
  return failures_;
}

std::vector<DatasetEntry> LoadManifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read manifest " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("manifest " + path.string() + ": " + e.what());
  }
  if (!doc.is_array()) {
    throw ConfigError("manifest " + path.string() + " must be a JSON array");
  }
  std::vector<DatasetEntry> out;
  for (const auto& item : doc) {
    for (const char* key : {"name", "path", "task", "target_column"}) {
      if (!item.contains(key) || !item[key].is_string()) {
        throw ConfigError("manifest entry missing string field '" +
                          std::string(key) + "'");
      }
    }
    DatasetEntry entry;
    entry.name = item["name"].get<std::string>();
    entry.path = item["path"].get<std::string>();
    if (entry.path.is_relative()) entry.path = path.parent_path() / entry.path;
    entry.task = TaskSpec::FromName(item["task"].get<std::string>());
    entry.target_column = item["target_column"].get<std::string>();
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace pipesynth
