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

#ifndef PIPESYNTH_MCTS_H_
#define PIPESYNTH_MCTS_H_

// Network-guided Monte-Carlo tree search over pipeline states.
//
// Selection maximizes
//
//   U(s, a) = Q(s, a) + c P(a|s) sqrt(N(s)) / (1 + N(s, a))
//
// with N(s) the sum of the edge visit counts at s and Q = W / N (0 for
// unvisited edges). Ties go to the lowest action index. Non-terminal leaves
// are expanded with the network priors and back up the network value;
// terminal leaves back up the actual evaluation of their pipeline.
// Rewards lie in [0, 1] and the game has a single player, so values are
// backed up unchanged.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pipesynth/evaluator.hpp"
#include "pipesynth/game.hpp"
#include "pipesynth/network.hpp"

namespace pipesynth {

struct Edge {
  int action = 0;
  double prior = 0.0;
  std::int64_t visits = 0;
  double total_value = 0.0;
  // Index of the child node in the tree, -1 until first traversal.
  int child = -1;

  double q() const { return visits == 0 ? 0.0 : total_value / static_cast<double>(visits); }
};

struct SearchNode {
  GameState state;
  std::vector<Edge> edges;
  std::int64_t total_visits = 0;
  bool expanded = false;
  bool terminal = false;
  // Actual evaluation, filled on the first visit of a terminal node.
  std::optional<double> terminal_value;
};

// Q assigned to edges that have not been visited yet.
enum class UnvisitedValue { kZero, kParentMean };

struct SearchConfig {
  double c = 6.0;
  UnvisitedValue unvisited = UnvisitedValue::kZero;
  int simulations = 64;
  // Moves played at `initial_temperature` before switching to
  // `final_temperature`.
  int temperature_moves = 2;
  double initial_temperature = 1.0;
  double final_temperature = 0.25;
  bool root_noise = false;
  double dirichlet_alpha = 0.3;
  double noise_weight = 0.25;
  bool reuse_subtree = false;

  double TemperatureAt(int move) const {
    return move < temperature_moves ? initial_temperature : final_temperature;
  }
};

// U(s, a) above for one edge.
double Ucb(const Edge& edge, std::int64_t total_visits, double c);
// Same, with `unvisited_q` standing in for Q when the edge has no visits.
double Ucb(const Edge& edge, std::int64_t total_visits, double c,
           double unvisited_q);

struct SearchStats {
  std::int64_t simulations = 0;
  std::int64_t expanded_nodes = 0;
  // Sum over expanded nodes of their legal-action counts.
  std::int64_t total_actions = 0;
  std::int64_t max_depth = 0;
  std::int64_t depth_sum = 0;
  std::int64_t evaluator_calls = 0;
  std::int64_t evaluator_failures = 0;

  double mean_branching() const {
    return expanded_nodes == 0 ? 0.0
                               : static_cast<double>(total_actions) /
                                     static_cast<double>(expanded_nodes);
  }
  double mean_depth() const {
    return simulations == 0 ? 0.0
                            : static_cast<double>(depth_sum) /
                                  static_cast<double>(simulations);
  }
  SearchStats& operator+=(const SearchStats& other);
};

// Evaluation of a terminal state: nullopt pipelines (incomplete derivation
// at the step cap) score 0 without calling the evaluator.
EvaluationResult EvaluateTerminal(const Game& game, const GameState& state,
                                  PipelineEvaluator& evaluator);

// One search tree, owned by a single thread.
class Search {
 public:
  Search(const Game& game, const ModelParams& params,
         PipelineEvaluator& evaluator, const SearchConfig& config,
         std::mt19937_64& rng);

  // Discards the tree and expands a fresh root. `state` must be
  // non-terminal.
  void Reset(const GameState& state);
  // Moves the root to the child reached by `action`, keeping its subtree.
  void Advance(int action);

  void Simulate();
  void Run(int simulations);

  const SearchNode& root() const { return nodes_[root_]; }
  const SearchNode& node(int index) const { return nodes_.at(static_cast<std::size_t>(index)); }
  const SearchStats& stats() const { return stats_; }

 private:
  int AddNode(GameState state);
  // Expands `index` with network priors; returns the network value.
  double Expand(int index);
  void AddRootNoise();

  const Game& game_;
  const ModelParams& params_;
  PipelineEvaluator& evaluator_;
  SearchConfig config_;
  std::mt19937_64& rng_;
  std::vector<SearchNode> nodes_;
  int root_ = -1;
  SearchStats stats_;
};

// Visit-count policy over the whole action vocabulary:
// pi_a proportional to N(root, a)^(1/temperature) on legal actions, one-hot
// at the most visited action (lowest index on ties) when temperature is 0.
std::vector<double> SearchPolicy(const SearchNode& root, int num_actions,
                                 double temperature);

// Draws an action index from a probability vector.
int SampleAction(const std::vector<double>& pi, std::mt19937_64& rng);

struct MoveRecord {
  int action = 0;
  std::string action_name;
  std::vector<double> pi;
};

struct EpisodeResult {
  // Empty when the step cap stopped an incomplete derivation.
  Pipeline pipeline;
  double e = 0.0;
  EvalStatus status = EvalStatus::kOk;
  std::vector<TrainingExample> examples;
  std::vector<MoveRecord> moves;
  SearchStats stats;
};

// Plays one self-play episode from `start`: search, record (state, pi),
// sample the move from pi at the scheduled temperature, repeat until a
// terminal state; then evaluate the realized pipeline and assign its score
// as the value target of every recorded example. Recorded pi uses
// temperature 1.
EpisodeResult RunEpisode(const Game& game, const GameState& start,
                         const ModelParams& params, PipelineEvaluator& evaluator,
                         const SearchConfig& config, std::mt19937_64& rng);

}  // namespace pipesynth

#endif  // PIPESYNTH_MCTS_H_
