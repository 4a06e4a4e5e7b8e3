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


#include "pipesynth/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include "pipesynth/checkpoint.hpp"
#include "pipesynth/csv.hpp"
#include "pipesynth/errors.hpp"
#include "pipesynth/executor_client.hpp"
#include "pipesynth/hashing.hpp"
#include "pipesynth/metafeatures.hpp"

namespace pipesynth {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

std::string UtcNow() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

double SecondsSince(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::shared_ptr<const Grammar> LoadGrammar(const std::filesystem::path& path) {
  if (path.empty()) throw ConfigError("no grammar file given");
  if (!std::filesystem::exists(path)) {
    throw ConfigError("grammar file not found: " + path.string());
  }
  return std::make_shared<const Grammar>(Grammar::Load(path));
}

void CheckCommon(const CommonOptions& options) {
  if (options.workers < 1) throw ConfigError("--workers must be >= 1");
  if (options.evaluator != "surrogate" && options.evaluator != "external") {
    throw ConfigError("unknown evaluator '" + options.evaluator +
                      "' (expected surrogate or external)");
  }
  if (options.game.max_terminals < 1) throw ConfigError("max terminals must be >= 1");
  if (options.game.max_steps < 1) throw ConfigError("max steps must be >= 1");
  if (options.trainer.search.simulations < 1) throw ConfigError("simulations must be >= 1");
  if (!(options.trainer.search.c >= 0.0)) throw ConfigError("exploration constant must be >= 0");
}

TaskSpec DefaultTask(const CommonOptions& options) {
  return options.task ? TaskSpec::FromName(*options.task) : TaskSpec::Classification();
}

std::optional<std::uint64_t> SurrogateSeed(const std::string& spec) {
  static constexpr std::string_view kPrefix = "surrogate:";
  if (!spec.starts_with(kPrefix)) return std::nullopt;
  const std::string digits = spec.substr(kPrefix.size());
  if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos) {
    throw ConfigError("bad surrogate dataset '" + spec + "' (expected surrogate:SEED)");
  }
  try {
    return std::stoull(digits);
  } catch (const std::exception&) {
    throw ConfigError("bad surrogate dataset '" + spec + "'");
  }
}

// Builds fresh Dataset objects (each with its own cache) from dataset specs.
// One executor process is shared by every external dataset.
class DatasetFactory {
 public:
  DatasetFactory(const CommonOptions& options, const Grammar& grammar)
      : options_(options), grammar_(grammar) {}

  Dataset Make(const std::string& spec) {
    if (auto seed = SurrogateSeed(spec)) {
      if (options_.evaluator != "surrogate") {
        throw ConfigError("dataset " + spec + " needs --evaluator surrogate");
      }
      return MakeSurrogateDataset(grammar_, *seed, DefaultTask(options_));
    }
    if (options_.evaluator != "external") {
      throw ConfigError("dataset " + spec + " needs --evaluator external");
    }
    const DatasetEntry entry = ResolveEntry(spec);
    Dataset dataset;
    dataset.name = entry.name;
    dataset.task = entry.task;
    if (options_.task && TaskSpec::FromName(*options_.task) != entry.task) {
      throw ConfigError("dataset " + entry.name + " is a " +
                        std::string(TaskName(entry.task.kind)) + " task");
    }
    auto meta = meta_cache_.find(entry.name);
    if (meta == meta_cache_.end()) {
      const Table table = ReadCsv(entry.path);
      meta = meta_cache_.emplace(entry.name,
                                 ComputeMetaFeatures(table, entry.target_column, entry.task)).first;
    }
    dataset.meta = meta->second;
    dataset.evaluator = std::make_shared<CachedEvaluator>(
        std::make_shared<ExternalEvaluator>(Client(), entry));
    return dataset;
  }

 private:
  DatasetEntry ResolveEntry(const std::string& spec) {
    const auto hash = spec.find('#');
    const std::filesystem::path manifest = spec.substr(0, hash);
    if (!std::filesystem::exists(manifest)) {
      throw ConfigError("dataset manifest not found: " + manifest.string());
    }
    const auto entries = LoadManifest(manifest);
    if (entries.empty()) throw ConfigError("manifest " + manifest.string() + " is empty");
    if (hash == std::string::npos) return entries.front();
    const std::string name = spec.substr(hash + 1);
    for (const auto& entry : entries) {
      if (entry.name == name) return entry;
    }
    throw ConfigError("manifest " + manifest.string() + " has no dataset '" + name + "'");
  }

  std::shared_ptr<ExecutorClient> Client() {
    if (client_) return client_;
    std::string command = options_.executor_cmd;
    if (command.empty()) {
      if (const char* env = std::getenv(kExecutorEnvVar)) command = env;
    }
    if (command.empty()) {
      throw ConfigError(std::string("external evaluator needs --executor-cmd or ") + kExecutorEnvVar);
    }
    ExecutorOptions executor;
    executor.argv = SplitCommandLine(command);
    executor.seed = options_.seed;
    client_ = std::make_shared<ExecutorClient>(std::move(executor));
    client_->Start();
    client_->ValidatePrimitives(grammar_);
    return client_;
  }

  const CommonOptions& options_;
  const Grammar& grammar_;
  std::shared_ptr<ExecutorClient> client_;
  std::map<std::string, MetaFeatures> meta_cache_;
};

Game MakeGame(std::shared_ptr<const Grammar> grammar, const GameConfig& config,
              std::optional<ActionSpace> mode = std::nullopt) {
  GameConfig copy = config;
  if (mode) copy.mode = *mode;
  return Game(std::move(grammar), copy);
}

ModelParams LoadParams(const std::filesystem::path& path, const Game& game) {
  if (!std::filesystem::exists(path)) {
    throw ConfigError("checkpoint not found: " + path.string());
  }
  Checkpoint checkpoint = LoadCheckpoint(path);
  ValidateCheckpoint(checkpoint, game);
  return std::move(checkpoint.params);
}

// Runs fn(0..n-1) on up to `workers` threads; rethrows the first failure.
void ParallelFor(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mutex;
  std::vector<std::thread> threads;
  const auto count = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  for (std::size_t w = 0; w < count; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

json SearchConfigJson(const SearchConfig& search) {
  return {
      {"c", search.c},
      {"simulations", search.simulations},
      {"temperature_moves", search.temperature_moves},
      {"initial_temperature", search.initial_temperature},
      {"final_temperature", search.final_temperature},
      {"unvisited_q", search.unvisited == UnvisitedValue::kZero ? "zero" : "parent_mean"},
      {"root_noise", search.root_noise},
      {"dirichlet_alpha", search.dirichlet_alpha},
      {"noise_weight", search.noise_weight},
      {"reuse_subtree", search.reuse_subtree},
  };
}

json CommonJson(const CommonOptions& options, const Grammar& grammar) {
  const auto& t = options.trainer;
  return {
      {"grammar", options.grammar.string()},
      {"grammar_fingerprint", grammar.Fingerprint()},
      {"evaluator", options.evaluator},
      {"task", options.task.value_or("classification")},
      {"seed", options.seed},
      {"workers", options.workers},
      {"game",
       {{"mode", ActionSpaceName(options.game.mode)},
        {"max_steps", options.game.max_steps},
        {"max_terminals", options.game.max_terminals},
        {"encode_length", options.game.encode_length}}},
      {"trainer",
       {{"episodes_per_iteration", t.episodes_per_iteration},
        {"gradient_steps", t.gradient_steps},
        {"batch_size", t.batch_size},
        {"learning_rate", t.learning_rate},
        {"alpha", t.alpha},
        {"buffer_capacity", t.buffer_capacity},
        {"training_enabled", t.training_enabled}}},
      {"search", SearchConfigJson(t.search)},
  };
}

json BudgetJson(const Budget& budget) {
  json out = json::object();
  if (budget.episodes) out["episodes"] = *budget.episodes;
  if (budget.evaluations) out["evaluations"] = *budget.evaluations;
  if (budget.cpu_seconds) out["cpu_seconds"] = *budget.cpu_seconds;
  if (budget.target_score) out["target_score"] = *budget.target_score;
  out["stall_episodes"] = budget.stall_episodes;
  return out;
}

json SeriesJson(const std::vector<BestSoFar>& series, bool with_time) {
  json out = json::array();
  for (const auto& point : series) {
    json row = {{"evaluations", point.evaluations},
                {"score", point.score},
                {"pipeline", JoinPipeline(point.pipeline)}};
    if (with_time) row["timing"] = {{"cpu_seconds", point.cpu_seconds}};
    out.push_back(std::move(row));
  }
  return out;
}

json RunRecord(const std::string& dataset, ActionSpace mode, std::uint64_t seed,
               const SynthesisResult& result, double wall_seconds) {
  json record = {
      {"dataset", dataset},
      {"mode", ActionSpaceName(mode)},
      {"seed", seed},
      {"best_pipeline", result.best_pipeline},
      {"best_e", result.best_e},
      {"episodes", result.episodes},
      {"evaluations", result.evaluations},
      {"evaluations_to_best", result.evaluations_to_best},
      {"total_actions", result.stats.total_actions},
      {"mean_branching", result.stats.mean_branching()},
      {"mean_depth", result.stats.mean_depth()},
      {"max_depth", result.stats.max_depth},
      {"simulations", result.stats.simulations},
      {"evaluator_failures", result.stats.evaluator_failures},
      {"best_series", SeriesJson(result.best_series, false)},
      {"timing", {{"wall_seconds", wall_seconds}, {"cpu_seconds", result.cpu_seconds}}},
  };
  if (result.evaluations_to_target) {
    record["evaluations_to_target"] = *result.evaluations_to_target;
  }
  return record;
}

json Envelope(std::string_view command, json config) {
  return {
      {"command", command},
      {"version", kReportVersion},
      {"generated_at", UtcNow()},
      {"config", std::move(config)},
      {"records", json::array()},
      {"aggregate", json::object()},
  };
}

class RunLog {
 public:
  explicit RunLog(const std::filesystem::path& path) {
    if (path.empty()) return;
    out_.open(path, std::ios::app);
    if (!out_) throw ConfigError("cannot open run log " + path.string());
  }
  void Write(const json& line) {
    if (!out_.is_open()) return;
    out_ << line.dump() << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
};

json ProvenanceLine(const EpisodeLog& log) {
  json moves = json::array();
  for (const auto& move : log.moves) {
    json pi = json::array();
    for (std::size_t a = 0; a < move.pi.size(); ++a) {
      if (move.pi[a] > 0.0) pi.push_back({a, move.pi[a]});
    }
    moves.push_back({{"action", move.action}, {"name", move.action_name}, {"pi", std::move(pi)}});
  }
  return {{"episode", log.episode},
          {"moves", std::move(moves)},
          {"pipeline", log.pipeline},
          {"e", log.e},
          {"status", EvalStatusName(log.status)},
          {"evaluations", log.evaluations}};
}

double MedianOf(const json& values) {
  std::vector<double> v;
  for (const auto& x : values) v.push_back(x.get<double>());
  return Median(std::move(v));
}

TrainerConfig WithWorkers(const CommonOptions& options) {
  TrainerConfig config = options.trainer;
  config.workers = options.workers;
  return config;
}

double SurrogateOptimum(const Grammar& grammar, std::uint64_t seed, int max_terminals) {
  return BruteForceBest(SurrogateSpec{seed}, grammar, max_terminals).score;
}

}  // namespace

std::uint64_t DeriveSeed(std::uint64_t master, std::string_view label, std::uint64_t index) {
  return SplitMix64(SplitMix64(master ^ Fnv1a64(label)) + index);
}

double Median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

json StripVolatile(const json& report) {
  if (report.is_object()) {
    json out = json::object();
    for (const auto& [key, value] : report.items()) {
      if (key == "generated_at" || key == "timing") continue;
      out[key] = StripVolatile(value);
    }
    return out;
  }
  if (report.is_array()) {
    json out = json::array();
    for (const auto& value : report) out.push_back(StripVolatile(value));
    return out;
  }
  return report;
}

SynthOutcome RunSynth(const SynthOptions& options) {
  CheckCommon(options.common);
  auto grammar = LoadGrammar(options.common.grammar);
  const Game game = MakeGame(grammar, options.common.game);
  DatasetFactory factory(options.common, *grammar);
  Dataset dataset = factory.Make(options.dataset);
  ModelParams params = options.checkpoint
                           ? LoadParams(*options.checkpoint, game)
                           : ModelParams::Initial(ShapeFor(game), options.common.seed);
  RunLog run_log(options.common.run_log);

  const auto start = Clock::now();
  const SynthesisResult result = Synthesize(game, dataset, std::move(params), options.budget,
                                            WithWorkers(options.common), options.common.seed);
  const double wall = SecondsSince(start);
  if (result.evaluations > 0 && dataset.evaluator->failures() == result.evaluations) {
    throw ExecutorError("every evaluation failed on dataset " + dataset.name);
  }

  json config = CommonJson(options.common, *grammar);
  config["dataset"] = options.dataset;
  config["budget"] = BudgetJson(options.budget);
  config["checkpoint"] = options.checkpoint ? options.checkpoint->string() : "";
  json report = Envelope("synth", std::move(config));
  report["records"].push_back(RunRecord(dataset.name, game.mode(), options.common.seed, result, wall));
  report["aggregate"] = {{"best_pipeline", result.best_pipeline},
                         {"best_e", result.best_e},
                         {"episodes", result.episodes},
                         {"evaluations", result.evaluations}};
  report["timing"] = {{"wall_seconds", wall}, {"cpu_seconds", result.cpu_seconds}};

  for (const auto& point : SeriesJson(result.best_series, true)) {
    json line = point;
    line["event"] = "best";
    line["dataset"] = dataset.name;
    run_log.Write(line);
  }
  run_log.Write({{"event", "done"}, {"dataset", dataset.name}, {"best_e", result.best_e},
                 {"evaluations", result.evaluations}, {"episodes", result.episodes}});

  if (!options.provenance.empty()) {
    std::ofstream out(options.provenance);
    if (!out) throw ConfigError("cannot write provenance log " + options.provenance.string());
    for (const auto& log : result.provenance) out << ProvenanceLine(log).dump() << '\n';
  }
  return {std::move(report), result.best_pipeline, result.best_e};
}

json RunCompareGrammar(const CompareOptions& options) {
  CheckCommon(options.common);
  if (options.datasets.empty()) throw ConfigError("compare-grammar needs at least one dataset");
  auto grammar = LoadGrammar(options.common.grammar);
  const Game grammar_game = MakeGame(grammar, options.common.game, ActionSpace::kGrammar);
  const Game edit_game = MakeGame(grammar, options.common.game, ActionSpace::kEdit);
  DatasetFactory factory(options.common, *grammar);
  const TrainerConfig config = options.common.trainer;

  // Two runs per dataset: grammar then edit, same seed and budget.
  const std::size_t n = options.datasets.size();
  std::vector<Dataset> datasets;
  for (std::size_t i = 0; i < 2 * n; ++i) datasets.push_back(factory.Make(options.datasets[i / 2]));
  std::vector<json> records(2 * n);
  ParallelFor(2 * n, options.common.workers, [&](std::size_t i) {
    const Game& game = i % 2 == 0 ? grammar_game : edit_game;
    const std::uint64_t seed = DeriveSeed(options.common.seed, "compare", i / 2);
    const auto start = Clock::now();
    const auto result = Synthesize(game, datasets[i], ModelParams::Initial(ShapeFor(game), seed),
                                   options.budget, config, seed);
    records[i] = RunRecord(datasets[i].name, game.mode(), seed, result, SecondsSince(start));
  });

  json cfg = CommonJson(options.common, *grammar);
  cfg["datasets"] = options.datasets;
  cfg["budget"] = BudgetJson(options.budget);
  json report = Envelope("compare-grammar", std::move(cfg));
  json pairs = json::array();
  json g_actions = json::array(), e_actions = json::array(), abs_delta = json::array();
  bool branching_lower = true;
  double g_sum = 0.0, e_sum = 0.0;
  for (std::size_t d = 0; d < n; ++d) {
    const json& g = records[2 * d];
    const json& e = records[2 * d + 1];
    const double delta = g["best_e"].get<double>() - e["best_e"].get<double>();
    pairs.push_back({{"dataset", g["dataset"]},
                     {"best_e_grammar", g["best_e"]},
                     {"best_e_edit", e["best_e"]},
                     {"delta_best_e", delta},
                     {"abs_delta_best_e", std::abs(delta)},
                     {"total_actions_grammar", g["total_actions"]},
                     {"total_actions_edit", e["total_actions"]},
                     {"mean_branching_grammar", g["mean_branching"]},
                     {"mean_branching_edit", e["mean_branching"]},
                     {"mean_depth_grammar", g["mean_depth"]},
                     {"mean_depth_edit", e["mean_depth"]},
                     {"max_depth_grammar", g["max_depth"]},
                     {"max_depth_edit", e["max_depth"]}});
    g_actions.push_back(g["total_actions"]);
    e_actions.push_back(e["total_actions"]);
    abs_delta.push_back(std::abs(delta));
    g_sum += g["total_actions"].get<double>();
    e_sum += e["total_actions"].get<double>();
    branching_lower = branching_lower &&
                      g["mean_branching"].get<double>() < e["mean_branching"].get<double>();
    report["records"].push_back(g);
    report["records"].push_back(e);
  }
  report["pairs"] = std::move(pairs);
  report["aggregate"] = {
      {"median_total_actions_grammar", MedianOf(g_actions)},
      {"median_total_actions_edit", MedianOf(e_actions)},
      {"log_mean_total_actions_grammar", std::log(std::max(1.0, g_sum / static_cast<double>(n)))},
      {"log_mean_total_actions_edit", std::log(std::max(1.0, e_sum / static_cast<double>(n)))},
      {"median_abs_delta_best_e", MedianOf(abs_delta)},
      {"grammar_branching_lower_everywhere", branching_lower},
  };
  RunLog run_log(options.common.run_log);
  for (const auto& record : report["records"]) {
    run_log.Write({{"event", "run"}, {"dataset", record["dataset"]}, {"mode", record["mode"]},
                   {"best_e", record["best_e"]}, {"best_series", record["best_series"]},
                   {"timing", record["timing"]}});
  }
  return report;
}

std::string CompareGrammarCsv(const json& report) {
  static const char* kColumns[] = {
      "dataset", "best_e_grammar", "best_e_edit", "delta_best_e",
      "total_actions_grammar", "total_actions_edit", "mean_branching_grammar",
      "mean_branching_edit", "mean_depth_grammar", "mean_depth_edit",
      "max_depth_grammar", "max_depth_edit"};
  std::ostringstream out;
  out.precision(17);
  for (std::size_t i = 0; i < std::size(kColumns); ++i) out << (i ? "," : "") << kColumns[i];
  out << '\n';
  for (const auto& pair : report.at("pairs")) {
    for (std::size_t i = 0; i < std::size(kColumns); ++i) {
      const json& v = pair.at(kColumns[i]);
      out << (i ? "," : "");
      if (v.is_string()) {
        out << v.get<std::string>();
      } else if (v.is_number_integer()) {
        out << v.get<std::int64_t>();
      } else {
        out << v.get<double>();
      }
    }
    out << '\n';
  }
  return out.str();
}

json RunAblate(const AblateOptions& options) {
  CheckCommon(options.common);
  if (options.seeds.empty()) throw ConfigError("ablate needs at least one surrogate seed");
  if (options.repetitions < 1) throw ConfigError("repetitions must be >= 1");
  if (options.evaluation_budget < 1) throw ConfigError("evaluation budget must be >= 1");
  if (!(options.target_fraction > 0.0 && options.target_fraction <= 1.0)) {
    throw ConfigError("target fraction must be in (0, 1]");
  }
  if (options.common.evaluator != "surrogate") throw ConfigError("ablate runs on surrogate seeds only");
  auto grammar = LoadGrammar(options.common.grammar);
  const Game game = MakeGame(grammar, options.common.game);
  std::optional<ModelParams> start_params;
  if (options.checkpoint) start_params = LoadParams(*options.checkpoint, game);

  const std::size_t seeds = options.seeds.size();
  const auto reps = static_cast<std::size_t>(options.repetitions);
  std::vector<double> targets(seeds);
  for (std::size_t s = 0; s < seeds; ++s) {
    targets[s] = options.target_fraction *
                 SurrogateOptimum(*grammar, options.seeds[s], options.common.game.max_terminals);
  }
  // Index layout: ((seed * reps) + rep) * 2 + mode, mode 0 trained, 1 uniform.
  std::vector<json> records(seeds * reps * 2);
  std::vector<double> to_target(records.size());
  ParallelFor(records.size(), options.common.workers, [&](std::size_t i) {
    const std::size_t s = i / (2 * reps);
    const std::size_t r = (i / 2) % reps;
    const bool uniform = i % 2 == 1;
    const std::uint64_t seed =
        DeriveSeed(options.common.seed, "ablate:" + std::to_string(options.seeds[s]), r);
    Dataset dataset = MakeSurrogateDataset(*grammar, options.seeds[s], DefaultTask(options.common));
    TrainerConfig config = options.common.trainer;
    config.training_enabled = !uniform;
    ModelParams params = uniform ? ModelParams::Zeros(ShapeFor(game))
                         : start_params ? *start_params
                                        : ModelParams::Initial(ShapeFor(game), seed);
    Budget budget;
    budget.evaluations = options.evaluation_budget;
    budget.target_score = targets[s];
    const auto start = Clock::now();
    const auto result = Synthesize(game, dataset, std::move(params), budget, config, seed);
    json record = RunRecord(dataset.name, game.mode(), seed, result, SecondsSince(start));
    record["network"] = uniform ? "uniform" : "trained";
    record["repetition"] = r;
    record["reached_target"] = result.evaluations_to_target.has_value();
    // Runs that miss the target count as budget + 1.
    to_target[i] = result.evaluations_to_target
                       ? static_cast<double>(*result.evaluations_to_target)
                       : static_cast<double>(options.evaluation_budget + 1);
    records[i] = std::move(record);
  });

  json cfg = CommonJson(options.common, *grammar);
  cfg["seeds"] = options.seeds;
  cfg["target_fraction"] = options.target_fraction;
  cfg["evaluation_budget"] = options.evaluation_budget;
  cfg["repetitions"] = options.repetitions;
  cfg["checkpoint"] = options.checkpoint ? options.checkpoint->string() : "";
  json report = Envelope("ablate", std::move(cfg));
  json table = json::array();
  int trained_wins = 0;
  for (std::size_t s = 0; s < seeds; ++s) {
    std::vector<double> trained, uniform;
    int trained_reached = 0, uniform_reached = 0;
    for (std::size_t r = 0; r < reps; ++r) {
      const std::size_t base = (s * reps + r) * 2;
      trained.push_back(to_target[base]);
      uniform.push_back(to_target[base + 1]);
      trained_reached += records[base]["reached_target"].get<bool>();
      uniform_reached += records[base + 1]["reached_target"].get<bool>();
    }
    const double mt = Median(trained), mu = Median(uniform);
    trained_wins += mt <= mu;
    table.push_back({{"seed", options.seeds[s]},
                     {"target_score", targets[s]},
                     {"median_evaluations_trained", mt},
                     {"median_evaluations_uniform", mu},
                     {"reached_trained", trained_reached},
                     {"reached_uniform", uniform_reached},
                     {"trained_not_worse", mt <= mu}});
  }
  for (auto& record : records) report["records"].push_back(std::move(record));
  report["table"] = std::move(table);
  report["aggregate"] = {{"seeds", seeds}, {"seeds_trained_not_worse", trained_wins}};
  RunLog run_log(options.common.run_log);
  for (const auto& record : report["records"]) {
    run_log.Write({{"event", "run"}, {"dataset", record["dataset"]}, {"network", record["network"]},
                   {"repetition", record["repetition"]}, {"best_series", record["best_series"]},
                   {"timing", record["timing"]}});
  }
  return report;
}

json RunPretrain(const PretrainCommandOptions& options) {
  CheckCommon(options.common);
  if (options.datasets.size() < 2) throw ConfigError("pretrain needs at least two datasets");
  if (options.iterations < 0) throw ConfigError("iterations must be >= 0");
  if (options.checkpoint_out.empty()) throw ConfigError("pretrain needs a checkpoint output path");
  auto grammar = LoadGrammar(options.common.grammar);
  const Game game = MakeGame(grammar, options.common.game);
  DatasetFactory factory(options.common, *grammar);
  std::vector<Dataset> datasets;
  for (const auto& spec : options.datasets) datasets.push_back(factory.Make(spec));

  json cfg = CommonJson(options.common, *grammar);
  cfg["datasets"] = options.datasets;
  cfg["iterations"] = options.iterations;
  cfg["checkpoint_every"] = options.checkpoint_every;
  cfg["checkpoint"] = options.checkpoint_out.string();
  json report = Envelope("pretrain", std::move(cfg));
  RunLog run_log(options.common.run_log);

  PretrainOptions pretrain;
  pretrain.iterations = options.iterations;
  pretrain.checkpoint_every = options.checkpoint_every;
  pretrain.checkpoint_path = options.checkpoint_out;
  const auto start = Clock::now();
  const double cpu_start = ProcessCpuSeconds();
  Checkpoint checkpoint;
  try {
    checkpoint = Pretrain(
        game, datasets, ModelParams::Initial(ShapeFor(game), options.common.seed),
        WithWorkers(options.common), options.common.seed, pretrain,
        [&](const IterationReport& it) {
          json row = {{"iteration", it.iteration},
                      {"episodes", it.episodes},
                      {"mean_e", it.mean_e},
                      {"best_e", it.best_e},
                      {"loss_before", it.loss_before},
                      {"loss_after", it.loss_after},
                      {"evaluations", it.evaluations},
                      {"total_actions", it.stats.total_actions},
                      {"mean_branching", it.stats.mean_branching()},
                      {"mean_depth", it.stats.mean_depth()},
                      {"max_depth", it.stats.max_depth}};
          report["records"].push_back(row);
          row["event"] = "iteration";
          row["timing"] = {{"wall_seconds", SecondsSince(start)},
                           {"cpu_seconds", ProcessCpuSeconds() - cpu_start}};
          run_log.Write(row);
        });
  } catch (const std::ios_base::failure& e) {
    throw ConfigError(std::string("checkpoint write failed: ") + e.what());
  }
  report["aggregate"] = {{"iterations", checkpoint.iteration},
                         {"parameters", checkpoint.params.size()},
                         {"checkpoint", options.checkpoint_out.string()}};
  report["timing"] = {{"wall_seconds", SecondsSince(start)},
                      {"cpu_seconds", ProcessCpuSeconds() - cpu_start}};
  return report;
}

json RunWarmstartEval(const WarmstartOptions& options) {
  CheckCommon(options.common);
  if (options.repetitions < 1) throw ConfigError("repetitions must be >= 1");
  if (options.evaluation_budget < 1) throw ConfigError("evaluation budget must be >= 1");
  auto grammar = LoadGrammar(options.common.grammar);
  const Game game = MakeGame(grammar, options.common.game);
  const ModelParams warm = LoadParams(options.checkpoint, game);
  DatasetFactory factory(options.common, *grammar);

  double target = 0.0;
  if (options.target_score) {
    target = *options.target_score;
  } else if (auto seed = SurrogateSeed(options.dataset)) {
    if (!(options.target_fraction > 0.0 && options.target_fraction <= 1.0)) {
      throw ConfigError("target fraction must be in (0, 1]");
    }
    target = options.target_fraction *
             SurrogateOptimum(*grammar, *seed, options.common.game.max_terminals);
  } else {
    throw ConfigError("warmstart-eval on a real dataset needs --target-score");
  }

  const auto reps = static_cast<std::size_t>(options.repetitions);
  std::vector<Dataset> datasets;
  for (std::size_t i = 0; i < 2 * reps; ++i) datasets.push_back(factory.Make(options.dataset));
  std::vector<json> records(2 * reps);
  std::vector<double> to_target(2 * reps);
  ParallelFor(2 * reps, options.common.workers, [&](std::size_t i) {
    const bool cold = i % 2 == 1;
    const std::uint64_t seed = DeriveSeed(options.common.seed, "warmstart", i / 2);
    ModelParams params = cold ? ModelParams::Initial(ShapeFor(game), seed) : warm;
    Budget budget;
    budget.evaluations = options.evaluation_budget;
    budget.target_score = target;
    const auto start = Clock::now();
    const auto result = Synthesize(game, datasets[i], std::move(params), budget,
                                   options.common.trainer, seed);
    json record = RunRecord(datasets[i].name, game.mode(), seed, result, SecondsSince(start));
    record["network"] = cold ? "cold" : "warm";
    record["repetition"] = i / 2;
    record["reached_target"] = result.evaluations_to_target.has_value();
    to_target[i] = result.evaluations_to_target
                       ? static_cast<double>(*result.evaluations_to_target)
                       : static_cast<double>(options.evaluation_budget + 1);
    records[i] = std::move(record);
  });

  json cfg = CommonJson(options.common, *grammar);
  cfg["dataset"] = options.dataset;
  cfg["checkpoint"] = options.checkpoint.string();
  cfg["target_fraction"] = options.target_fraction;
  cfg["target_score"] = target;
  cfg["evaluation_budget"] = options.evaluation_budget;
  cfg["repetitions"] = options.repetitions;
  json report = Envelope("warmstart-eval", std::move(cfg));
  std::vector<double> warm_evals, cold_evals;
  int warm_reached = 0, cold_reached = 0;
  for (std::size_t i = 0; i < 2 * reps; ++i) {
    const bool cold = i % 2 == 1;
    (cold ? cold_evals : warm_evals).push_back(to_target[i]);
    (cold ? cold_reached : warm_reached) += records[i]["reached_target"].get<bool>();
    report["records"].push_back(std::move(records[i]));
  }
  const double warm_median = Median(warm_evals);
  const double cold_median = Median(cold_evals);
  report["aggregate"] = {{"target_score", target},
                         {"median_evaluations_warm", warm_median},
                         {"median_evaluations_cold", cold_median},
                         {"reached_warm", warm_reached},
                         {"reached_cold", cold_reached},
                         {"warm_to_cold_ratio", cold_median > 0 ? warm_median / cold_median : 0.0}};
  RunLog run_log(options.common.run_log);
  for (const auto& record : report["records"]) {
    run_log.Write({{"event", "run"}, {"network", record["network"]},
                   {"repetition", record["repetition"]}, {"best_series", record["best_series"]},
                   {"timing", record["timing"]}});
  }
  return report;
}

json RunGrammarStats(const GrammarStatsOptions& options) {
  if (options.max_terminals < 1) throw ConfigError("max terminals must be >= 1");
  auto grammar = LoadGrammar(options.grammar);
  const auto pipelines = EnumeratePipelines(*grammar, options.max_terminals, options.limit);
  std::map<std::size_t, std::int64_t> by_length;
  std::size_t max_length = 0;
  double total_length = 0.0;
  for (const auto& p : pipelines) {
    ++by_length[p.rules.size()];
    max_length = std::max(max_length, p.rules.size());
    total_length += static_cast<double>(p.rules.size());
  }
  json alternatives = json::object();
  for (const auto& nt : grammar->nonterminals()) {
    alternatives[nt] = grammar->RulesFor(*grammar->FindNonterminal(nt)).size();
  }

  json report = Envelope("grammar-stats", {{"grammar", options.grammar.string()},
                                           {"grammar_fingerprint", grammar->Fingerprint()},
                                           {"max_terminals", options.max_terminals},
                                           {"limit", options.limit}});
  for (const auto& [length, count] : by_length) {
    report["records"].push_back({{"derivation_length", length}, {"pipelines", count}});
  }
  report["aggregate"] = {
      {"language_size", pipelines.size()},
      {"terminals", grammar->terminals().size()},
      {"nonterminals", grammar->nonterminals().size()},
      {"rules", grammar->num_rules()},
      {"max_derivation_length", max_length},
      {"mean_derivation_length",
       pipelines.empty() ? 0.0 : total_length / static_cast<double>(pipelines.size())},
      {"alternatives", std::move(alternatives)},
  };
  return report;
}

}  // namespace pipesynth
