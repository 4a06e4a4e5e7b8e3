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

#include "pipesynth/mcts.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pipesynth {
namespace {

// Uniform double in [0, 1) from the top 53 bits, identical on every
// standard library.
double UniformUnit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

double Ucb(const Edge& edge, std::int64_t total_visits, double c) {
  return edge.q() + c * edge.prior * std::sqrt(static_cast<double>(total_visits)) /
                        (1.0 + static_cast<double>(edge.visits));
}

double Ucb(const Edge& edge, std::int64_t total_visits, double c,
           double unvisited_q) {
  const double q = edge.visits == 0 ? unvisited_q : edge.q();
  return q + c * edge.prior * std::sqrt(static_cast<double>(total_visits)) /
                 (1.0 + static_cast<double>(edge.visits));
}

SearchStats& SearchStats::operator+=(const SearchStats& other) {
  simulations += other.simulations;
  expanded_nodes += other.expanded_nodes;
  total_actions += other.total_actions;
  max_depth = std::max(max_depth, other.max_depth);
  depth_sum += other.depth_sum;
  evaluator_calls += other.evaluator_calls;
  evaluator_failures += other.evaluator_failures;
  return *this;
}

EvaluationResult EvaluateTerminal(const Game& game, const GameState& state,
                                  PipelineEvaluator& evaluator) {
  auto pipeline = game.Realize(state);
  if (!pipeline) {
    return EvaluationResult::Invalid("derivation incomplete at step cap");
  }
  if (pipeline->empty()) return EvaluationResult::Invalid("empty pipeline");
  return evaluator.Evaluate(*pipeline);
}

Search::Search(const Game& game, const ModelParams& params,
               PipelineEvaluator& evaluator, const SearchConfig& config,
               std::mt19937_64& rng)
    : game_(game), params_(params), evaluator_(evaluator), config_(config), rng_(rng) {
  if (config_.simulations < 1) throw std::invalid_argument("simulations must be >= 1");
  if (!(config_.c >= 0.0)) throw std::invalid_argument("c must be >= 0");
}

int Search::AddNode(GameState state) {
  SearchNode node;
  node.terminal = game_.IsTerminal(state);
  node.state = std::move(state);
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size()) - 1;
}

double Search::Expand(int index) {
  SearchNode& node = nodes_[static_cast<std::size_t>(index)];
  const auto legal = game_.LegalActions(node.state);
  const auto mask = game_.LegalMask(node.state);
  const PolicyValue pv = Forward(params_, game_.Encode(node.state), mask);
  node.edges.clear();
  node.edges.reserve(legal.size());
  for (int a : legal) {
    Edge edge;
    edge.action = a;
    edge.prior = pv.p[static_cast<std::size_t>(a)];
    node.edges.push_back(edge);
  }
  node.expanded = true;
  ++stats_.expanded_nodes;
  stats_.total_actions += static_cast<std::int64_t>(legal.size());
  return pv.v;
}

void Search::AddRootNoise() {
  SearchNode& root = nodes_[static_cast<std::size_t>(root_)];
  if (root.edges.empty()) return;
  std::gamma_distribution<double> gamma(config_.dirichlet_alpha, 1.0);
  std::vector<double> noise(root.edges.size());
  double total = 0.0;
  for (double& n : noise) {
    n = gamma(rng_);
    total += n;
  }
  if (!(total > 0.0)) return;
  for (std::size_t i = 0; i < noise.size(); ++i) {
    root.edges[i].prior = (1.0 - config_.noise_weight) * root.edges[i].prior +
                          config_.noise_weight * noise[i] / total;
  }
}

void Search::Reset(const GameState& state) {
  nodes_.clear();
  root_ = AddNode(state);
  if (nodes_[static_cast<std::size_t>(root_)].terminal) {
    throw std::invalid_argument("search root is terminal");
  }
  Expand(root_);
  if (config_.root_noise) AddRootNoise();
}

void Search::Advance(int action) {
  SearchNode& root = nodes_.at(static_cast<std::size_t>(root_));
  auto it = std::find_if(root.edges.begin(), root.edges.end(),
                         [action](const Edge& e) { return e.action == action; });
  if (it == root.edges.end()) throw std::invalid_argument("action not at root");
  int child = it->child;
  if (child < 0) {
    GameState next = game_.Step(root.state, action);
    child = AddNode(std::move(next));
  }
  root_ = child;
  SearchNode& next_root = nodes_[static_cast<std::size_t>(root_)];
  if (next_root.terminal) return;
  if (!next_root.expanded) Expand(root_);
  if (config_.root_noise) AddRootNoise();
}

void Search::Simulate() {
  // (node, edge) pairs traversed from the root.
  std::vector<std::pair<int, std::size_t>> path;
  int index = root_;
  double value = 0.0;
  while (true) {
    SearchNode& node = nodes_[static_cast<std::size_t>(index)];
    if (node.terminal) {
      if (!node.terminal_value) {
        const auto result = EvaluateTerminal(game_, node.state, evaluator_);
        ++stats_.evaluator_calls;
        if (result.status == EvalStatus::kExecutorError) ++stats_.evaluator_failures;
        nodes_[static_cast<std::size_t>(index)].terminal_value = result.score;
      }
      value = *nodes_[static_cast<std::size_t>(index)].terminal_value;
      break;
    }
    if (!node.expanded) {
      value = Expand(index);
      break;
    }
    if (node.edges.empty()) break;
    double unvisited_q = 0.0;
    if (config_.unvisited == UnvisitedValue::kParentMean && node.total_visits > 0) {
      double total = 0.0;
      for (const auto& edge : node.edges) total += edge.total_value;
      unvisited_q = total / static_cast<double>(node.total_visits);
    }
    std::size_t best = 0;
    double best_u = Ucb(node.edges[0], node.total_visits, config_.c, unvisited_q);
    for (std::size_t i = 1; i < node.edges.size(); ++i) {
      const double u = Ucb(node.edges[i], node.total_visits, config_.c, unvisited_q);
      if (u > best_u) {
        best_u = u;
        best = i;
      }
    }
    path.emplace_back(index, best);
    int child = node.edges[best].child;
    if (child < 0) {
      GameState next = game_.Step(node.state, node.edges[best].action);
      child = AddNode(std::move(next));  // invalidates `node`
      nodes_[static_cast<std::size_t>(index)].edges[best].child = child;
    }
    index = child;
  }

  for (const auto& [node_index, edge_index] : path) {
    SearchNode& node = nodes_[static_cast<std::size_t>(node_index)];
    Edge& edge = node.edges[edge_index];
    ++edge.visits;
    edge.total_value += value;
    ++node.total_visits;
  }
  ++stats_.simulations;
  const auto depth = static_cast<std::int64_t>(path.size());
  stats_.depth_sum += depth;
  stats_.max_depth = std::max(stats_.max_depth, depth);
}

void Search::Run(int simulations) {
  for (int i = 0; i < simulations; ++i) Simulate();
}

std::vector<double> SearchPolicy(const SearchNode& root, int num_actions,
                                 double temperature) {
  std::vector<double> pi(static_cast<std::size_t>(num_actions), 0.0);
  if (root.edges.empty()) return pi;
  std::int64_t max_visits = 0;
  std::size_t argmax = 0;
  for (std::size_t i = 0; i < root.edges.size(); ++i) {
    if (root.edges[i].visits > max_visits) {
      max_visits = root.edges[i].visits;
      argmax = i;
    }
  }
  if (max_visits == 0) {
    // No visits yet: fall back to the priors' support, uniformly.
    for (const auto& edge : root.edges) {
      pi[static_cast<std::size_t>(edge.action)] = 1.0 / static_cast<double>(root.edges.size());
    }
    return pi;
  }
  if (temperature <= 0.0) {
    pi[static_cast<std::size_t>(root.edges[argmax].action)] = 1.0;
    return pi;
  }
  double total = 0.0;
  for (const auto& edge : root.edges) {
    const double ratio = static_cast<double>(edge.visits) / static_cast<double>(max_visits);
    const double weight = edge.visits == 0 ? 0.0 : std::pow(ratio, 1.0 / temperature);
    pi[static_cast<std::size_t>(edge.action)] = weight;
    total += weight;
  }
  for (double& value : pi) value /= total;
  return pi;
}

int SampleAction(const std::vector<double>& pi, std::mt19937_64& rng) {
  const double u = UniformUnit(rng);
  double cumulative = 0.0;
  int last_positive = -1;
  for (std::size_t a = 0; a < pi.size(); ++a) {
    if (pi[a] <= 0.0) continue;
    cumulative += pi[a];
    last_positive = static_cast<int>(a);
    if (u < cumulative) return last_positive;
  }
  return last_positive;
}

EpisodeResult RunEpisode(const Game& game, const GameState& start,
                         const ModelParams& params, PipelineEvaluator& evaluator,
                         const SearchConfig& config, std::mt19937_64& rng) {
  EpisodeResult result;
  GameState state = start;
  Search search(game, params, evaluator, config, rng);
  int move = 0;
  int previous_action = -1;
  while (!game.IsTerminal(state)) {
    if (move == 0 || !config.reuse_subtree) {
      search.Reset(state);
    } else {
      search.Advance(previous_action);
    }
    search.Run(config.simulations);

    TrainingExample example;
    example.encoded = game.Encode(state);
    example.legal = game.LegalMask(state);
    example.pi = SearchPolicy(search.root(), game.num_actions(), 1.0);

    const auto play = SearchPolicy(search.root(), game.num_actions(),
                                   config.TemperatureAt(move));
    const int action = SampleAction(play, rng);
    result.moves.push_back({action, game.ActionName(action), example.pi});
    result.examples.push_back(std::move(example));

    state = game.Step(state, action);
    previous_action = action;
    ++move;
  }
  result.stats = search.stats();

  const auto evaluation = EvaluateTerminal(game, state, evaluator);
  ++result.stats.evaluator_calls;
  if (evaluation.status == EvalStatus::kExecutorError) ++result.stats.evaluator_failures;
  if (auto pipeline = game.Realize(state)) result.pipeline = *pipeline;
  result.e = evaluation.score;
  result.status = evaluation.status;
  for (auto& example : result.examples) example.e = result.e;
  return result;
}

}  // namespace pipesynth
