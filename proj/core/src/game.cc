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

#include "pipesynth/game.hpp"

#include <algorithm>

#include "pipesynth/errors.hpp"

namespace pipesynth {

std::string_view ActionSpaceName(ActionSpace mode) {
  return mode == ActionSpace::kGrammar ? "grammar" : "edit";
}

ActionSpace ActionSpaceFromName(std::string_view name) {
  if (name == "grammar") return ActionSpace::kGrammar;
  if (name == "edit") return ActionSpace::kEdit;
  throw ConfigError("unknown action space '" + std::string(name) +
                    "' (expected grammar or edit)");
}

Vocabulary::Vocabulary(std::vector<std::string> tokens)
    : tokens_(std::move(tokens)) {
  for (int i = 0; i < size(); ++i) index_.emplace(tokens_[i], i);
}

Vocabulary Vocabulary::ForGrammar(const Grammar& grammar) {
  std::vector<std::string> tokens = {"<pad>", "<sop>"};
  for (const auto& t : grammar.terminals()) tokens.push_back(t);
  for (const auto& nt : grammar.nonterminals()) tokens.push_back("<" + nt + ">");
  tokens.push_back(TaskToken(TaskKind::kClassification));
  tokens.push_back(TaskToken(TaskKind::kRegression));
  return Vocabulary(std::move(tokens));
}

std::optional<int> Vocabulary::Find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string Vocabulary::TaskToken(TaskKind kind) {
  return "task:" + std::string(TaskName(kind));
}

EncodedState EncodeState(const GameState& state, const Grammar& grammar,
                         const Vocabulary& vocab, int length) {
  auto lookup = [&](const std::string& token) {
    auto id = vocab.Find(token);
    if (!id) throw std::invalid_argument("symbol " + token + " not in vocabulary");
    return *id;
  };
  EncodedState out;
  out.meta = state.meta;
  out.tokens.reserve(static_cast<std::size_t>(length));
  out.tokens.push_back(Vocabulary::kStartOfPipeline);
  out.tokens.push_back(lookup(Vocabulary::TaskToken(state.task.kind)));
  for (Symbol s : state.derivation.symbols) {
    const int id = lookup(grammar.Display(s));
    if (static_cast<int>(out.tokens.size()) < length) out.tokens.push_back(id);
  }
  out.tokens.resize(static_cast<std::size_t>(length), Vocabulary::kPad);
  return out;
}

Game::Game(std::shared_ptr<const Grammar> grammar, GameConfig config)
    : grammar_(std::move(grammar)),
      config_(config),
      vocab_(Vocabulary::ForGrammar(*grammar_)) {
  if (config_.max_steps < 1) throw ConfigError("max_steps must be >= 1");
  if (config_.max_terminals < 1) throw ConfigError("max_terminals must be >= 1");
  if (config_.encode_length < 2) throw ConfigError("encode_length must be >= 2");
  if (config_.mode == ActionSpace::kGrammar) {
    num_actions_ = grammar_->num_rules();
  } else {
    const int k = config_.max_terminals;
    const int v = static_cast<int>(grammar_->terminals().size());
    num_actions_ = 2 * k * v + k + 1;
  }
}

GameState Game::InitialState(const MetaFeatures& meta,
                             const TaskSpec& task) const {
  GameState state;
  if (config_.mode == ActionSpace::kGrammar) {
    state.derivation = Derivation::Start(*grammar_);
  }
  state.meta = meta;
  state.task = task;
  return state;
}

Action Game::Decode(int index) const {
  if (index < 0 || index >= num_actions_) {
    throw IllegalActionError("action index " + std::to_string(index) +
                             " out of range");
  }
  if (config_.mode == ActionSpace::kGrammar) return Action::Rule(index);
  const int k = config_.max_terminals;
  const int v = static_cast<int>(grammar_->terminals().size());
  if (index < k * v) return Action::Insert(index / v, index % v);
  index -= k * v;
  if (index < k) return Action::Delete(index);
  index -= k;
  if (index < k * v) return Action::Substitute(index / v, index % v);
  return Action::Finish();
}

int Game::IndexOf(const Action& action) const {
  const int k = config_.max_terminals;
  const int v = static_cast<int>(grammar_->terminals().size());
  switch (action.kind) {
    case ActionKind::kRule:
      return action.rule;
    case ActionKind::kInsert:
      return action.position * v + action.terminal;
    case ActionKind::kDelete:
      return k * v + action.position;
    case ActionKind::kSubstitute:
      return k * v + k + action.position * v + action.terminal;
    case ActionKind::kFinish:
      return 2 * k * v + k;
  }
  return -1;
}

std::string Game::ActionName(int index) const {
  const Action a = Decode(index);
  switch (a.kind) {
    case ActionKind::kRule:
      return grammar_->DisplayRule(a.rule);
    case ActionKind::kInsert:
      return "insert(" + std::to_string(a.position) + ", " +
             grammar_->terminals()[a.terminal] + ")";
    case ActionKind::kDelete:
      return "delete(" + std::to_string(a.position) + ")";
    case ActionKind::kSubstitute:
      return "substitute(" + std::to_string(a.position) + ", " +
             grammar_->terminals()[a.terminal] + ")";
    case ActionKind::kFinish:
      return "finish";
  }
  return {};
}

std::string Game::StateString(const GameState& state) const {
  std::string out = "[";
  for (std::size_t i = 0; i < state.derivation.symbols.size(); ++i) {
    if (i) out += ' ';
    out += grammar_->Display(state.derivation.symbols[i]);
  }
  return out + "]";
}

std::vector<int> Game::LegalActions(const GameState& state) const {
  std::vector<int> out;
  if (state.steps_taken >= config_.max_steps || state.finished) return out;
  const auto& symbols = state.derivation.symbols;

  if (config_.mode == ActionSpace::kGrammar) {
    const auto pos = LeftmostNonterminal(state.derivation);
    if (!pos) return out;
    // Yield lower bound of everything except the expanded nonterminal.
    long rest = 0;
    for (std::size_t i = 0; i < symbols.size(); ++i) {
      if (i != *pos) rest += grammar_->MinYield(symbols[i]);
    }
    for (int rule_id : grammar_->RulesFor(symbols[*pos])) {
      long bound = rest;
      for (Symbol s : grammar_->rule(rule_id).rhs) bound += grammar_->MinYield(s);
      if (bound <= config_.max_terminals) out.push_back(rule_id);
    }
    return out;
  }

  const int len = static_cast<int>(symbols.size());
  const int v = static_cast<int>(grammar_->terminals().size());
  if (len < config_.max_terminals) {
    for (int p = 0; p <= len; ++p) {
      for (int t = 0; t < v; ++t) out.push_back(IndexOf(Action::Insert(p, t)));
    }
  }
  for (int p = 0; p < len; ++p) out.push_back(IndexOf(Action::Delete(p)));
  for (int p = 0; p < len; ++p) {
    for (int t = 0; t < v; ++t) out.push_back(IndexOf(Action::Substitute(p, t)));
  }
  if (len > 0) out.push_back(IndexOf(Action::Finish()));
  return out;
}

std::vector<std::uint8_t> Game::LegalMask(const GameState& state) const {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(num_actions_), 0);
  for (int a : LegalActions(state)) mask[static_cast<std::size_t>(a)] = 1;
  return mask;
}

GameState Game::Step(const GameState& state, int action) const {
  const auto legal = LegalActions(state);
  if (!std::binary_search(legal.begin(), legal.end(), action)) {
    std::string what = action >= 0 && action < num_actions_
                           ? ActionName(action)
                           : "#" + std::to_string(action);
    throw IllegalActionError("illegal action " + what + " in state " +
                             StateString(state));
  }
  GameState next = state;
  next.actions.push_back(action);
  ++next.steps_taken;
  const Action a = Decode(action);
  auto& symbols = next.derivation.symbols;
  switch (a.kind) {
    case ActionKind::kRule:
      next.derivation = ApplyRule(*grammar_, state.derivation, a.rule);
      break;
    case ActionKind::kInsert:
      symbols.insert(symbols.begin() + a.position,
                     Symbol::Terminal(static_cast<std::uint32_t>(a.terminal)));
      break;
    case ActionKind::kDelete:
      symbols.erase(symbols.begin() + a.position);
      break;
    case ActionKind::kSubstitute:
      symbols[static_cast<std::size_t>(a.position)] =
          Symbol::Terminal(static_cast<std::uint32_t>(a.terminal));
      break;
    case ActionKind::kFinish:
      next.finished = true;
      break;
  }
  return next;
}

bool Game::IsTerminal(const GameState& state) const {
  if (state.steps_taken >= config_.max_steps) return true;
  if (config_.mode == ActionSpace::kEdit) return state.finished;
  if (IsComplete(state.derivation)) return true;
  // Dead end: no rule keeps the pipeline within max_terminals.
  return LegalActions(state).empty();
}

std::optional<Pipeline> Game::Realize(const GameState& state) const {
  if (!IsComplete(state.derivation)) return std::nullopt;
  return ToPipeline(*grammar_, state.derivation);
}

EncodedState Game::Encode(const GameState& state) const {
  return EncodeState(state, *grammar_, vocab_, config_.encode_length);
}

}  // namespace pipesynth
