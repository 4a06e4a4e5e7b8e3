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


// Command-line front end.
//
//   pipesynth synth --grammar G --dataset surrogate:7 --budget-episodes 50
//   pipesynth compare-grammar --grammar G --seeds 1-10
//   pipesynth ablate --grammar G --seeds 1-5 --repetitions 20
//   pipesynth pretrain --grammar G --seeds 1-8 --iterations 10 --checkpoint-out ck.bin
//   pipesynth warmstart-eval --grammar G --dataset surrogate:9 --checkpoint ck.bin
//   pipesynth grammar-stats --grammar G --max-terminals 8
//
// Exit codes: 0 success, 2 configuration error, 3 executor failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pipesynth/errors.hpp"
#include "pipesynth/experiments.hpp"
#include "pipesynth/grammar.hpp"

namespace {

using pipesynth::CommonOptions;
using pipesynth::ConfigError;

constexpr int kExitConfig = 2;
constexpr int kExitExecutor = 3;

// "1-5,9" -> {1,2,3,4,5,9}
std::vector<std::uint64_t> ParseSeeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    try {
      const auto dash = item.find('-');
      if (dash == std::string::npos) {
        seeds.push_back(std::stoull(item));
      } else {
        const auto lo = std::stoull(item.substr(0, dash));
        const auto hi = std::stoull(item.substr(dash + 1));
        if (hi < lo) throw ConfigError("empty seed range " + item);
        for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
      }
    } catch (const std::logic_error&) {
      throw ConfigError("bad seed list '" + text + "'");
    }
  }
  return seeds;
}

struct CommonFlags {
  CommonOptions options;
  std::string mode = "grammar";
  std::string unvisited = "zero";
  bool no_train = false;
  std::string out;
};

void AddCommon(CLI::App* app, CommonFlags& f) {
  auto& o = f.options;
  app->add_option("--grammar", o.grammar, "Grammar file")->required();
  app->add_option("--evaluator", o.evaluator, "surrogate | external");
  app->add_option("--executor-cmd", o.executor_cmd,
                  std::string("Executor command line (default: $") + pipesynth::kExecutorEnvVar + ")");
  app->add_option("--task", o.task, "classification | regression");
  app->add_option("--seed", o.seed, "Master seed");
  app->add_option("--workers", o.workers, "Parallel workers (1 keeps runs reproducible)");
  app->add_option("--mode", f.mode, "Action space: grammar | edit");
  app->add_option("--max-steps", o.game.max_steps, "Step cap per episode");
  app->add_option("--max-terminals", o.game.max_terminals, "Pipeline length cap");
  app->add_option("--simulations", o.trainer.search.simulations, "MCTS simulations per move");
  app->add_option("--c", o.trainer.search.c, "Exploration constant");
  app->add_option("--unvisited-q", f.unvisited, "Q of unvisited edges: zero | parent_mean");
  app->add_option("--episodes-per-iteration", o.trainer.episodes_per_iteration,
                  "Episodes between training phases");
  app->add_option("--gradient-steps", o.trainer.gradient_steps, "Gradient steps per phase");
  app->add_option("--batch-size", o.trainer.batch_size, "Mini-batch size");
  app->add_option("--learning-rate", o.trainer.learning_rate, "SGD learning rate");
  app->add_option("--alpha", o.trainer.alpha, "L2 weight");
  app->add_flag("--no-train", f.no_train, "Never update the network");
  app->add_option("--run-log", o.run_log, "Append JSON-lines run log here");
  app->add_option("--out", f.out, "Write the JSON report here");
}

void Finalize(CommonFlags& f) {
  f.options.game.mode = pipesynth::ActionSpaceFromName(f.mode);
  if (f.unvisited == "zero") {
    f.options.trainer.search.unvisited = pipesynth::UnvisitedValue::kZero;
  } else if (f.unvisited == "parent_mean") {
    f.options.trainer.search.unvisited = pipesynth::UnvisitedValue::kParentMean;
  } else {
    throw ConfigError("unknown --unvisited-q '" + f.unvisited + "'");
  }
  if (f.no_train) f.options.trainer.training_enabled = false;
}

void WriteFile(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out || !(out << text)) throw ConfigError("cannot write " + path);
}

void Emit(const nlohmann::json& report, const std::string& out) {
  if (out.empty()) {
    std::cout << report.dump(2) << "\n";
  } else {
    WriteFile(out, report.dump(2) + "\n");
  }
}

struct BudgetFlags {
  std::optional<std::int64_t> episodes;
  std::optional<std::int64_t> evaluations;
  std::optional<double> seconds;
};

void AddBudget(CLI::App* app, BudgetFlags& b) {
  app->add_option("--budget-episodes", b.episodes, "Episode budget");
  app->add_option("--budget-evaluations", b.evaluations, "Evaluation budget (cache misses)");
  app->add_option("--budget-seconds", b.seconds, "Process CPU-time budget");
}

pipesynth::Budget ToBudget(const BudgetFlags& b, std::int64_t default_episodes) {
  pipesynth::Budget budget;
  budget.episodes = b.episodes;
  budget.evaluations = b.evaluations;
  budget.cpu_seconds = b.seconds;
  if (!b.episodes && !b.evaluations && !b.seconds) budget.episodes = default_episodes;
  return budget;
}

std::vector<std::string> SurrogateSpecs(const std::vector<std::uint64_t>& seeds) {
  std::vector<std::string> out;
  for (auto s : seeds) out.push_back("surrogate:" + std::to_string(s));
  return out;
}

int Run(int argc, char** argv) {
  CLI::App app{"Grammar-guided pipeline synthesis with MCTS and a policy/value network"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  // synth
  CommonFlags synth_common;
  BudgetFlags synth_budget;
  pipesynth::SynthOptions synth;
  std::string synth_checkpoint;
  std::string synth_provenance;
  auto* synth_cmd = app.add_subcommand("synth", "Synthesize a pipeline for one dataset");
  AddCommon(synth_cmd, synth_common);
  AddBudget(synth_cmd, synth_budget);
  synth_cmd->add_option("--dataset", synth.dataset, "surrogate:SEED | manifest.json[#name]")->required();
  synth_cmd->add_option("--checkpoint", synth_checkpoint, "Start from this checkpoint");
  synth_cmd->add_option("--provenance", synth_provenance,
                        "Provenance log (default: <out>.provenance.jsonl)");

  // compare-grammar
  CommonFlags cmp_common;
  BudgetFlags cmp_budget;
  std::vector<std::string> cmp_datasets;
  std::string cmp_seeds;
  std::string cmp_csv;
  auto* cmp_cmd = app.add_subcommand("compare-grammar", "Grammar vs. edit action spaces");
  AddCommon(cmp_cmd, cmp_common);
  AddBudget(cmp_cmd, cmp_budget);
  cmp_cmd->add_option("--dataset", cmp_datasets, "Dataset (repeatable)");
  cmp_cmd->add_option("--seeds", cmp_seeds, "Surrogate seeds, e.g. 1-10");
  cmp_cmd->add_option("--csv", cmp_csv, "Also write the paired rows as CSV");

  // ablate
  CommonFlags abl_common;
  pipesynth::AblateOptions ablate;
  std::string abl_seeds = "1-5";
  std::string abl_checkpoint;
  auto* abl_cmd = app.add_subcommand("ablate", "Trained network vs. uniform priors");
  AddCommon(abl_cmd, abl_common);
  abl_cmd->add_option("--seeds", abl_seeds, "Surrogate seeds");
  abl_cmd->add_option("--target-fraction", ablate.target_fraction, "Target as a fraction of the optimum");
  abl_cmd->add_option("--budget-evaluations", ablate.evaluation_budget, "Evaluation budget per run");
  abl_cmd->add_option("--repetitions", ablate.repetitions, "Repetitions per seed and mode");
  abl_cmd->add_option("--checkpoint", abl_checkpoint, "Initial parameters of the trained mode");

  // pretrain
  CommonFlags pre_common;
  pipesynth::PretrainCommandOptions pretrain;
  std::vector<std::string> pre_datasets;
  std::string pre_seeds;
  std::string pre_out;
  auto* pre_cmd = app.add_subcommand("pretrain", "Train one network across datasets");
  AddCommon(pre_cmd, pre_common);
  pre_cmd->add_option("--dataset", pre_datasets, "Dataset (repeatable)");
  pre_cmd->add_option("--seeds", pre_seeds, "Surrogate seeds, e.g. 1-8");
  pre_cmd->add_option("--iterations", pretrain.iterations, "Training iterations");
  pre_cmd->add_option("--checkpoint-every", pretrain.checkpoint_every, "Checkpoint period (0: end only)");
  pre_cmd->add_option("--checkpoint-out", pre_out, "Checkpoint file")->required();

  // warmstart-eval
  CommonFlags warm_common;
  pipesynth::WarmstartOptions warm;
  std::string warm_checkpoint;
  auto* warm_cmd = app.add_subcommand("warmstart-eval", "Pre-trained vs. fresh network");
  AddCommon(warm_cmd, warm_common);
  warm_cmd->add_option("--dataset", warm.dataset, "Held-out dataset")->required();
  warm_cmd->add_option("--checkpoint", warm_checkpoint, "Pre-trained checkpoint")->required();
  warm_cmd->add_option("--target-fraction", warm.target_fraction, "Target as a fraction of the optimum");
  warm_cmd->add_option("--target-score", warm.target_score, "Absolute target score");
  warm_cmd->add_option("--budget-evaluations", warm.evaluation_budget, "Evaluation budget per run");
  warm_cmd->add_option("--repetitions", warm.repetitions, "Repetitions per mode");

  // grammar-stats
  pipesynth::GrammarStatsOptions stats;
  std::string stats_out;
  auto* stats_cmd = app.add_subcommand("grammar-stats", "Language size and derivation lengths");
  stats_cmd->add_option("--grammar", stats.grammar, "Grammar file")->required();
  stats_cmd->add_option("--max-terminals", stats.max_terminals, "Pipeline length cap");
  stats_cmd->add_option("--limit", stats.limit, "Enumeration guard");
  stats_cmd->add_option("--out", stats_out, "Write the JSON report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (*synth_cmd) {
    Finalize(synth_common);
    synth.common = synth_common.options;
    synth.budget = ToBudget(synth_budget, 50);
    if (!synth_checkpoint.empty()) synth.checkpoint = synth_checkpoint;
    if (!synth_provenance.empty()) {
      synth.provenance = synth_provenance;
    } else if (!synth_common.out.empty()) {
      synth.provenance = synth_common.out + ".provenance.jsonl";
    }
    const auto outcome = pipesynth::RunSynth(synth);
    if (!synth_common.out.empty()) Emit(outcome.report, synth_common.out);
    std::cout << pipesynth::JoinPipeline(outcome.pipeline) << "\n" << outcome.e << "\n";
  } else if (*cmp_cmd) {
    Finalize(cmp_common);
    pipesynth::CompareOptions compare;
    compare.common = cmp_common.options;
    compare.budget = ToBudget(cmp_budget, 50);
    compare.datasets = cmp_datasets;
    for (auto& d : SurrogateSpecs(ParseSeeds(cmp_seeds))) compare.datasets.push_back(d);
    const auto report = pipesynth::RunCompareGrammar(compare);
    Emit(report, cmp_common.out);
    if (!cmp_csv.empty()) WriteFile(cmp_csv, pipesynth::CompareGrammarCsv(report));
  } else if (*abl_cmd) {
    Finalize(abl_common);
    ablate.common = abl_common.options;
    ablate.seeds = ParseSeeds(abl_seeds);
    if (!abl_checkpoint.empty()) ablate.checkpoint = abl_checkpoint;
    Emit(pipesynth::RunAblate(ablate), abl_common.out);
  } else if (*pre_cmd) {
    Finalize(pre_common);
    pretrain.common = pre_common.options;
    pretrain.datasets = pre_datasets;
    for (auto& d : SurrogateSpecs(ParseSeeds(pre_seeds))) pretrain.datasets.push_back(d);
    pretrain.checkpoint_out = pre_out;
    Emit(pipesynth::RunPretrain(pretrain), pre_common.out);
  } else if (*warm_cmd) {
    Finalize(warm_common);
    warm.common = warm_common.options;
    warm.checkpoint = warm_checkpoint;
    Emit(pipesynth::RunWarmstartEval(warm), warm_common.out);
  } else if (*stats_cmd) {
    const auto report = pipesynth::RunGrammarStats(stats);
    Emit(report, stats_out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return Run(argc, argv);
  } catch (const pipesynth::ExecutorError& e) {
    std::cerr << "pipesynth: executor failure: " << e.what() << "\n";
    return kExitExecutor;
  } catch (const pipesynth::Error& e) {
    std::cerr << "pipesynth: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "pipesynth: " << e.what() << "\n";
    return 1;
  }
}
