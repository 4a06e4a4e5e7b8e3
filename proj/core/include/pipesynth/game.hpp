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

#ifndef PIPESYNTH_GAME_H_
#define PIPESYNTH_GAME_H_

// The single-player pipeline synthesis game.
//
// A state is a partial pipeline plus the dataset's meta-features and the
// task. Two action spaces are available:
//
//  * grammar mode: an action is a production rule applied to the leftmost
//    nonterminal of the derivation; the game ends when the derivation is
//    complete;
//  * edit mode: an action inserts, deletes or substitutes one primitive at a
//    position, or `finish`es the (nonempty) pipeline.
//
// Both modes end after `max_steps` actions. Every action maps to a dense
// index in [0, num_actions()), which is also the policy-head index of the
// network.

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pipesynth/grammar.hpp"
#include "pipesynth/metafeatures.hpp"
#include "pipesynth/task.hpp"

namespace pipesynth {

enum class ActionSpace { kGrammar, kEdit };

std::string_view ActionSpaceName(ActionSpace mode);
ActionSpace ActionSpaceFromName(std::string_view name);

struct GameConfig {
  ActionSpace mode = ActionSpace::kGrammar;
  int max_steps = 20;
  // Longest pipeline the game can produce.
  int max_terminals = 8;
  // Token sequence length L of an encoded state.
  int encode_length = 16;
};

enum class ActionKind { kRule, kInsert, kDelete, kSubstitute, kFinish };

struct Action {
  ActionKind kind = ActionKind::kRule;
  int rule = -1;
  int position = -1;
  int terminal = -1;

  static Action Rule(int id) { return {ActionKind::kRule, id, -1, -1}; }
  static Action Insert(int pos, int t) { return {ActionKind::kInsert, -1, pos, t}; }
  static Action Delete(int pos) { return {ActionKind::kDelete, -1, pos, -1}; }
  static Action Substitute(int pos, int t) {
    return {ActionKind::kSubstitute, -1, pos, t};
  }
  static Action Finish() { return {ActionKind::kFinish, -1, -1, -1}; }

  friend bool operator==(const Action&, const Action&) = default;
};

struct GameState {
  // Grammar mode: the current sentential form. Edit mode: the terminal
  // sequence, with `applied` left empty.
  Derivation derivation;
  // Action indices taken so far (provenance).
  std::vector<int> actions;
  MetaFeatures meta{};
  TaskSpec task;
  int steps_taken = 0;
  bool finished = false;
};

// Token table shared by the state encoder and checkpoints:
//   0 <pad>, 1 <sop>, grammar terminals, grammar nonterminals (as <X>),
//   task:classification, task:regression.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kStartOfPipeline = 1;

  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> tokens);
  static Vocabulary ForGrammar(const Grammar& grammar);

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::optional<int> Find(std::string_view token) const;
  static std::string TaskToken(TaskKind kind);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

struct EncodedState {
  std::vector<int> tokens;
  MetaFeatures meta{};

  friend bool operator==(const EncodedState&, const EncodedState&) = default;
};

// [<sop>, task token, symbol tokens...] right-padded (or truncated) to
// `length`. Throws std::invalid_argument naming any symbol missing from
// `vocab`.
EncodedState EncodeState(const GameState& state, const Grammar& grammar,
                         const Vocabulary& vocab, int length);

class IllegalActionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Game {
 public:
  Game(std::shared_ptr<const Grammar> grammar, GameConfig config);

  const Grammar& grammar() const { return *grammar_; }
  std::shared_ptr<const Grammar> grammar_ptr() const { return grammar_; }
  const GameConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  ActionSpace mode() const { return config_.mode; }

  // Size A of the action vocabulary.
  int num_actions() const { return num_actions_; }

  GameState InitialState(const MetaFeatures& meta, const TaskSpec& task) const;

  // Legal action indices in increasing order; empty for terminal states.
  // Grammar mode keeps only rules after which the derivation can still
  // complete within max_terminals.
  std::vector<int> LegalActions(const GameState& state) const;
  std::vector<std::uint8_t> LegalMask(const GameState& state) const;

  // Throws IllegalActionError if `action` is not legal in `state`.
  GameState Step(const GameState& state, int action) const;

  bool IsTerminal(const GameState& state) const;

  // The realized pipeline of a terminal state: nullopt when the derivation
  // is still incomplete (step cap hit). In edit mode the current sequence.
  std::optional<Pipeline> Realize(const GameState& state) const;

  EncodedState Encode(const GameState& state) const;

  Action Decode(int index) const;
  int IndexOf(const Action& action) const;
  std::string ActionName(int index) const;
  std::string StateString(const GameState& state) const;

 private:
  std::shared_ptr<const Grammar> grammar_;
  GameConfig config_;
  Vocabulary vocab_;
  int num_actions_ = 0;
};

}  // namespace pipesynth

#endif  // PIPESYNTH_GAME_H_
