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

#ifndef PIPESYNTH_GRAMMAR_H_
#define PIPESYNTH_GRAMMAR_H_

// Context-free pipeline grammars <T, N, P, S> and leftmost derivations.
//
// Grammar text format, one rule set per line:
//
//   <S>  ::= <E> | <DC> <E>
//   <DC> ::= SkImputer | MissingIndicator
//   <E>  ::= GaussianNB | LinearSVC      # comment
//
// Nonterminals are wrapped in angle brackets, terminals are bare
// identifiers matching [A-Za-z0-9_.-]+, and the lhs of the first rule is the
// start symbol. A nonterminal may appear as lhs on several lines; rule ids
// follow file order.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pipesynth/errors.hpp"

namespace pipesynth {

enum class SymbolKind : std::uint8_t { kTerminal, kNonterminal };

// A grammar symbol, interned by its owning Grammar. `id` indexes
// Grammar::terminals() or Grammar::nonterminals() depending on `kind`.
struct Symbol {
  SymbolKind kind = SymbolKind::kTerminal;
  std::uint32_t id = 0;

  bool is_terminal() const { return kind == SymbolKind::kTerminal; }
  bool is_nonterminal() const { return kind == SymbolKind::kNonterminal; }

  static Symbol Terminal(std::uint32_t id) { return {SymbolKind::kTerminal, id}; }
  static Symbol Nonterminal(std::uint32_t id) {
    return {SymbolKind::kNonterminal, id};
  }

  friend auto operator<=>(const Symbol&, const Symbol&) = default;
};

struct ProductionRule {
  int id = 0;
  Symbol lhs;
  std::vector<Symbol> rhs;

  friend bool operator==(const ProductionRule&, const ProductionRule&) = default;
};

// A complete pipeline: the terminal names in execution order.
using Pipeline = std::vector<std::string>;

std::string JoinPipeline(std::span<const std::string> pipeline);

class Grammar {
 public:
  static constexpr int kUnproductive = std::numeric_limits<int>::max() / 4;

  // Throws GrammarError (with a line number) on malformed input.
  static Grammar Parse(std::string_view text);
  // Reads and parses a grammar file; throws ConfigError if unreadable.
  static Grammar Load(const std::filesystem::path& path);

  // Canonical text form; Parse(Serialize()) is structurally equal to *this.
  std::string Serialize() const;

  const std::vector<std::string>& terminals() const { return terminals_; }
  const std::vector<std::string>& nonterminals() const { return nonterminals_; }
  std::span<const ProductionRule> rules() const { return rules_; }
  const ProductionRule& rule(int id) const { return rules_.at(static_cast<std::size_t>(id)); }
  int num_rules() const { return static_cast<int>(rules_.size()); }
  Symbol start() const { return start_; }

  // Bare name (no brackets) of a symbol.
  const std::string& name(Symbol symbol) const;
  // Name as written in grammar text: `<DC>` for nonterminals.
  std::string Display(Symbol symbol) const;
  std::string DisplayRule(int id) const;

  std::optional<Symbol> FindTerminal(std::string_view name) const;
  std::optional<Symbol> FindNonterminal(std::string_view name) const;

  // Rule ids with the given lhs, in grammar order.
  std::span<const int> RulesFor(Symbol nonterminal) const;

  // Fewest terminals any complete expansion of `symbol` can yield
  // (1 for terminals, kUnproductive when no finite expansion exists).
  int MinYield(Symbol symbol) const;

  // FNV-1a hash of Serialize(); identifies the action space of a grammar.
  std::uint64_t Fingerprint() const;

  // Terminals reachable from `nonterminal` through any chain of rules.
  std::vector<Symbol> ReachableTerminals(Symbol nonterminal) const;

  friend bool operator==(const Grammar& a, const Grammar& b) {
    return a.terminals_ == b.terminals_ && a.nonterminals_ == b.nonterminals_ &&
           a.rules_ == b.rules_ && a.start_ == b.start_;
  }

 private:
  void Finalize();

  std::vector<std::string> terminals_;
  std::vector<std::string> nonterminals_;
  std::vector<ProductionRule> rules_;
  Symbol start_;
  std::unordered_map<std::string, std::uint32_t> terminal_index_;
  std::unordered_map<std::string, std::uint32_t> nonterminal_index_;
  std::vector<std::vector<int>> rules_by_lhs_;
  std::vector<int> min_yield_;
};

// A sentential form plus the rules applied (leftmost) to reach it.
struct Derivation {
  std::vector<Symbol> symbols;
  std::vector<int> applied;

  static Derivation Start(const Grammar& grammar);

  friend bool operator==(const Derivation&, const Derivation&) = default;
};

// Index of the leftmost nonterminal, or nullopt if the form is complete.
std::optional<std::size_t> LeftmostNonterminal(const Derivation& derivation);

// Rules whose lhs is the leftmost nonterminal of `derivation`, in grammar
// order. Empty iff the derivation is complete.
std::vector<int> ApplicableRules(const Grammar& grammar,
                                 const Derivation& derivation);

// Rewrites the leftmost nonterminal with rule `rule_id`. Throws
// std::invalid_argument naming both symbols when the rule does not apply.
Derivation ApplyRule(const Grammar& grammar, const Derivation& derivation,
                     int rule_id);

bool IsComplete(const Derivation& derivation);

// Terminal names of a complete derivation, in order.
Pipeline ToPipeline(const Grammar& grammar, const Derivation& derivation);

// Replays `applied` from the start symbol. Throws if any step is illegal.
Derivation Replay(const Grammar& grammar, std::span<const int> applied);

// Thrown by EnumeratePipelines when more than `limit` pipelines exist.
class EnumerationOverflow : public Error {
 public:
  using Error::Error;
};

struct EnumeratedPipeline {
  Pipeline pipeline;
  std::vector<int> rules;
};

// All complete leftmost derivations yielding at most `max_terminals`
// terminals, ordered lexicographically by rule-id sequence. Derivations
// producing an already-listed terminal sequence (ambiguous grammars) are
// dropped.
std::vector<EnumeratedPipeline> EnumeratePipelines(
    const Grammar& grammar, int max_terminals, std::size_t limit = 100000);

// True iff `pipeline` is in the language of `grammar`.
bool Recognizes(const Grammar& grammar, std::span<const std::string> pipeline);

}  // namespace pipesynth

#endif  // PIPESYNTH_GRAMMAR_H_
