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

#include "pipesynth/grammar.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "pipesynth/hashing.hpp"

namespace pipesynth {
namespace {

bool IsIdentifierChar(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
         (c >= '0' && c <= '9') || c == '_' || c == '.' || c == '-';
}

bool IsIdentifier(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), IsIdentifierChar);
}

std::string_view Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> SplitWhitespace(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

// Returns the bracketed name if `token` is `<name>`.
std::optional<std::string_view> NonterminalName(std::string_view token) {
  if (token.size() >= 3 && token.front() == '<' && token.back() == '>') {
    return token.substr(1, token.size() - 2);
  }
  return std::nullopt;
}

}  // namespace

std::string JoinPipeline(std::span<const std::string> pipeline) {
  std::string out;
  for (const auto& name : pipeline) {
    if (!out.empty()) out += ' ';
    out += name;
  }
  return out;
}

Grammar Grammar::Parse(std::string_view text) {
  Grammar g;
  // First line on which each nonterminal was referenced.
  std::map<std::uint32_t, int> first_reference;
  std::set<std::pair<std::uint32_t, std::vector<Symbol>>> seen_rules;

  auto intern_nonterminal = [&](std::string_view name, int line) {
    const std::string key(name);
    if (g.terminal_index_.contains(key)) {
      throw GrammarError(line, "symbol " + key +
                                   " is used both as terminal and nonterminal");
    }
    auto [it, inserted] = g.nonterminal_index_.try_emplace(
        key, static_cast<std::uint32_t>(g.nonterminals_.size()));
    if (inserted) {
      g.nonterminals_.push_back(key);
      first_reference[it->second] = line;
    }
    return Symbol::Nonterminal(it->second);
  };
  auto intern_terminal = [&](std::string_view name, int line) {
    const std::string key(name);
    if (g.nonterminal_index_.contains(key)) {
      throw GrammarError(line, "symbol " + key +
                                   " is used both as terminal and nonterminal");
    }
    auto [it, inserted] = g.terminal_index_.try_emplace(
        key, static_cast<std::uint32_t>(g.terminals_.size()));
    if (inserted) g.terminals_.push_back(key);
    return Symbol::Terminal(it->second);
  };

  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = Trim(line);
    if (line.empty()) continue;

    const auto arrow = line.find("::=");
    if (arrow == std::string_view::npos) {
      throw GrammarError(line_no, "expected '<LHS> ::= alternatives'");
    }
    const std::string_view lhs_token = Trim(line.substr(0, arrow));
    const auto lhs_name = NonterminalName(lhs_token);
    if (!lhs_name || !IsIdentifier(*lhs_name)) {
      throw GrammarError(line_no, "left-hand side '" + std::string(lhs_token) +
                                      "' is not a nonterminal");
    }
    const Symbol lhs = intern_nonterminal(*lhs_name, line_no);

    std::string_view rest = line.substr(arrow + 3);
    while (true) {
      const auto bar = rest.find('|');
      const std::string_view alt = Trim(rest.substr(0, bar));
      const auto tokens = SplitWhitespace(alt);
      if (tokens.empty()) {
        throw GrammarError(line_no, "empty alternative for <" +
                                        std::string(*lhs_name) + ">");
      }
      ProductionRule rule;
      rule.id = static_cast<int>(g.rules_.size());
      rule.lhs = lhs;
      for (std::string_view token : tokens) {
        if (auto nt = NonterminalName(token)) {
          if (!IsIdentifier(*nt)) {
            throw GrammarError(line_no, "undeclared symbol '" +
                                            std::string(token) + "'");
          }
          rule.rhs.push_back(intern_nonterminal(*nt, line_no));
        } else if (IsIdentifier(token)) {
          rule.rhs.push_back(intern_terminal(token, line_no));
        } else {
          throw GrammarError(line_no, "undeclared symbol '" +
                                          std::string(token) + "'");
        }
      }
      if (!seen_rules.emplace(lhs.id, rule.rhs).second) {
        throw GrammarError(line_no, "duplicate rule for <" +
                                        std::string(*lhs_name) + ">: " +
                                        std::string(alt));
      }
      g.rules_.push_back(std::move(rule));
      if (bar == std::string_view::npos) break;
      rest = rest.substr(bar + 1);
    }
  }

  if (g.rules_.empty()) throw GrammarError(0, "grammar has no rules");
  g.start_ = g.rules_.front().lhs;

  std::vector<bool> has_rules(g.nonterminals_.size(), false);
  for (const auto& rule : g.rules_) has_rules[rule.lhs.id] = true;
  for (std::uint32_t id = 0; id < g.nonterminals_.size(); ++id) {
    if (!has_rules[id]) {
      throw GrammarError(first_reference[id], "nonterminal <" +
                                                  g.nonterminals_[id] +
                                                  "> has no rules");
    }
  }
  g.Finalize();
  return g;
}

Grammar Grammar::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read grammar file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return Parse(buffer.str());
  } catch (const GrammarError& e) {
    throw GrammarError(e.line(), path.string() + ": " +
                                     std::string(e.what()));
  }
}

void Grammar::Finalize() {
  rules_by_lhs_.assign(nonterminals_.size(), {});
  for (const auto& rule : rules_) rules_by_lhs_[rule.lhs.id].push_back(rule.id);

  // Least fixed point of min-yield; rhs is never empty, so every
  // productive symbol yields at least one terminal.
  min_yield_.assign(nonterminals_.size(), kUnproductive);
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& rule : rules_) {
      long total = 0;
      for (Symbol s : rule.rhs) {
        total += s.is_terminal() ? 1 : min_yield_[s.id];
        if (total >= kUnproductive) break;
      }
      if (total < min_yield_[rule.lhs.id]) {
        min_yield_[rule.lhs.id] = static_cast<int>(total);
        changed = true;
      }
    }
  }
}

std::string Grammar::Serialize() const {
  std::string out;
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    const auto& rule = rules_[i];
    if (i == 0 || rules_[i - 1].lhs != rule.lhs) {
      if (i != 0) out += '\n';
      out += Display(rule.lhs) + " ::=";
    } else {
      out += " |";
    }
    for (Symbol s : rule.rhs) out += ' ' + Display(s);
  }
  out += '\n';
  return out;
}

const std::string& Grammar::name(Symbol symbol) const {
  return symbol.is_terminal() ? terminals_.at(symbol.id)
                              : nonterminals_.at(symbol.id);
}

std::string Grammar::Display(Symbol symbol) const {
  return symbol.is_terminal() ? name(symbol) : "<" + name(symbol) + ">";
}

std::string Grammar::DisplayRule(int id) const {
  const auto& r = rule(id);
  std::string out = Display(r.lhs) + " ::=";
  for (Symbol s : r.rhs) out += ' ' + Display(s);
  return out;
}

std::optional<Symbol> Grammar::FindTerminal(std::string_view name) const {
  auto it = terminal_index_.find(std::string(name));
  if (it == terminal_index_.end()) return std::nullopt;
  return Symbol::Terminal(it->second);
}

std::optional<Symbol> Grammar::FindNonterminal(std::string_view name) const {
  auto it = nonterminal_index_.find(std::string(name));
  if (it == nonterminal_index_.end()) return std::nullopt;
  return Symbol::Nonterminal(it->second);
}

std::span<const int> Grammar::RulesFor(Symbol nonterminal) const {
  return rules_by_lhs_.at(nonterminal.id);
}

int Grammar::MinYield(Symbol symbol) const {
  return symbol.is_terminal() ? 1 : min_yield_.at(symbol.id);
}

std::uint64_t Grammar::Fingerprint() const { return Fnv1a64(Serialize()); }

std::vector<Symbol> Grammar::ReachableTerminals(Symbol nonterminal) const {
  std::vector<bool> seen(nonterminals_.size(), false);
  std::vector<bool> found(terminals_.size(), false);
  std::vector<Symbol> stack{nonterminal};
  while (!stack.empty()) {
    const Symbol nt = stack.back();
    stack.pop_back();
    if (seen[nt.id]) continue;
    seen[nt.id] = true;
    for (int id : RulesFor(nt)) {
      for (Symbol s : rules_[id].rhs) {
        if (s.is_terminal()) {
          found[s.id] = true;
        } else {
          stack.push_back(s);
        }
      }
    }
  }
  std::vector<Symbol> out;
  for (std::uint32_t id = 0; id < found.size(); ++id) {
    if (found[id]) out.push_back(Symbol::Terminal(id));
  }
  return out;
}

Derivation Derivation::Start(const Grammar& grammar) {
  return Derivation{{grammar.start()}, {}};
}

std::optional<std::size_t> LeftmostNonterminal(const Derivation& derivation) {
  const auto it = std::find_if(derivation.symbols.begin(),
                               derivation.symbols.end(),
                               [](Symbol s) { return s.is_nonterminal(); });
  if (it == derivation.symbols.end()) return std::nullopt;
  return static_cast<std::size_t>(it - derivation.symbols.begin());
}

std::vector<int> ApplicableRules(const Grammar& grammar,
                                 const Derivation& derivation) {
  const auto pos = LeftmostNonterminal(derivation);
  if (!pos) return {};
  const auto rules = grammar.RulesFor(derivation.symbols[*pos]);
  return {rules.begin(), rules.end()};
}

Derivation ApplyRule(const Grammar& grammar, const Derivation& derivation,
                     int rule_id) {
  if (rule_id < 0 || rule_id >= grammar.num_rules()) {
    throw std::invalid_argument("rule id " + std::to_string(rule_id) +
                                " out of range");
  }
  const auto& rule = grammar.rule(rule_id);
  const auto pos = LeftmostNonterminal(derivation);
  if (!pos) {
    throw std::invalid_argument("rule " + grammar.DisplayRule(rule_id) +
                                " cannot expand a complete derivation (no " +
                                grammar.Display(rule.lhs) + " remains)");
  }
  const Symbol leftmost = derivation.symbols[*pos];
  if (leftmost != rule.lhs) {
    throw std::invalid_argument("rule " + grammar.DisplayRule(rule_id) +
                                " expands " + grammar.Display(rule.lhs) +
                                " but the leftmost nonterminal is " +
                                grammar.Display(leftmost));
  }
  Derivation next;
  next.symbols.reserve(derivation.symbols.size() + rule.rhs.size() - 1);
  next.symbols.insert(next.symbols.end(), derivation.symbols.begin(),
                      derivation.symbols.begin() + static_cast<long>(*pos));
  next.symbols.insert(next.symbols.end(), rule.rhs.begin(), rule.rhs.end());
  next.symbols.insert(next.symbols.end(),
                      derivation.symbols.begin() + static_cast<long>(*pos) + 1,
                      derivation.symbols.end());
  next.applied = derivation.applied;
  next.applied.push_back(rule_id);
  return next;
}

bool IsComplete(const Derivation& derivation) {
  return !LeftmostNonterminal(derivation).has_value();
}

Pipeline ToPipeline(const Grammar& grammar, const Derivation& derivation) {
  Pipeline out;
  out.reserve(derivation.symbols.size());
  for (Symbol s : derivation.symbols) {
    if (!s.is_terminal()) {
      throw std::invalid_argument("derivation is not complete");
    }
    out.push_back(grammar.name(s));
  }
  return out;
}

Derivation Replay(const Grammar& grammar, std::span<const int> applied) {
  Derivation d = Derivation::Start(grammar);
  for (int rule : applied) d = ApplyRule(grammar, d, rule);
  return d;
}

std::vector<EnumeratedPipeline> EnumeratePipelines(const Grammar& grammar,
                                                   int max_terminals,
                                                   std::size_t limit) {
  std::vector<EnumeratedPipeline> out;
  if (max_terminals < 1) return out;
  std::set<Pipeline> seen;
  // Bounds derivation length for grammars with unit cycles.
  const std::size_t max_depth =
      static_cast<std::size_t>(max_terminals + 1) *
      (grammar.nonterminals().size() + 1);

  std::function<void(const Derivation&)> expand = [&](const Derivation& d) {
    const auto pos = LeftmostNonterminal(d);
    if (!pos) {
      Pipeline p = ToPipeline(grammar, d);
      if (seen.insert(p).second) {
        if (out.size() >= limit) {
          throw EnumerationOverflow("language exceeds " +
                                    std::to_string(limit) + " pipelines");
        }
        out.push_back({std::move(p), d.applied});
      }
      return;
    }
    if (d.applied.size() >= max_depth) return;
    for (int rule_id : grammar.RulesFor(d.symbols[*pos])) {
      Derivation next = ApplyRule(grammar, d, rule_id);
      long bound = 0;
      for (Symbol s : next.symbols) bound += grammar.MinYield(s);
      if (bound > max_terminals) continue;
      expand(next);
    }
  };
  expand(Derivation::Start(grammar));
  return out;
}

bool Recognizes(const Grammar& grammar, std::span<const std::string> pipeline) {
  std::vector<Symbol> input;
  input.reserve(pipeline.size());
  for (const auto& name : pipeline) {
    auto t = grammar.FindTerminal(name);
    if (!t) return false;
    input.push_back(*t);
  }
  const int n = static_cast<int>(input.size());
  if (n == 0) return false;

  // Memoized top-down recognition over spans [i, j). In-progress entries
  // read as false, which cuts unit cycles.
  enum class Memo : std::uint8_t { kUnknown, kInProgress, kTrue, kFalse };
  std::map<std::tuple<std::uint32_t, int, int>, Memo> memo;

  std::function<bool(Symbol, int, int)> derives;
  std::function<bool(const std::vector<Symbol>&, std::size_t, int, int)> seq =
      [&](const std::vector<Symbol>& rhs, std::size_t k, int i, int j) {
        const int remaining = static_cast<int>(rhs.size() - k);
        if (remaining == 0) return i == j;
        if (j - i < remaining) return false;
        if (remaining == 1) return derives(rhs[k], i, j);
        for (int m = i + 1; m <= j - (remaining - 1); ++m) {
          if (derives(rhs[k], i, m) && seq(rhs, k + 1, m, j)) return true;
        }
        return false;
      };
  derives = [&](Symbol s, int i, int j) {
    if (s.is_terminal()) return j == i + 1 && input[i] == s;
    auto& state = memo[{s.id, i, j}];
    if (state == Memo::kTrue) return true;
    if (state == Memo::kFalse || state == Memo::kInProgress) return false;
    state = Memo::kInProgress;
    bool ok = false;
    for (int id : grammar.RulesFor(s)) {
      if (seq(grammar.rule(id).rhs, 0, i, j)) {
        ok = true;
        break;
      }
    }
    memo[{s.id, i, j}] = ok ? Memo::kTrue : Memo::kFalse;
    return ok;
  };
  return derives(grammar.start(), 0, n);
}

}  // namespace pipesynth
