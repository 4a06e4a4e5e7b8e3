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

#include <set>
#include <stdexcept>
#include <string>

#include "gtest/gtest.h"
#include "pipesynth/errors.hpp"
#include "test_util.hpp"

namespace pipesynth {
namespace {

using testing::ClassificationGrammar;
using testing::ToyGrammar;

Derivation FormOf(const Grammar& g, std::initializer_list<std::string> names) {
  Derivation d;
  for (const auto& name : names) {
    if (name.front() == '<') {
      d.symbols.push_back(*g.FindNonterminal(name.substr(1, name.size() - 2)));
    } else {
      d.symbols.push_back(*g.FindTerminal(name));
    }
  }
  return d;
}

std::string ParseError(std::string_view text) {
  try {
    Grammar::Parse(text);
  } catch (const GrammarError& e) {
    return e.what();
  }
  return "";
}

TEST(GrammarParse, TwoRuleGrammar) {
  const Grammar g = Grammar::Parse("<S> ::= <E>\n<E> ::= GaussianNB");
  EXPECT_EQ(g.num_rules(), 2);
  EXPECT_EQ(g.Display(g.start()), "<S>");
  ASSERT_EQ(g.terminals().size(), 1u);
  EXPECT_EQ(g.terminals()[0], "GaussianNB");
}

TEST(GrammarParse, SingleRuleLanguage) {
  const Grammar g = Grammar::Parse("<S> ::= t");
  EXPECT_EQ(g.num_rules(), 1);
  const auto all = EnumeratePipelines(g, 8);
  ASSERT_EQ(all.size(), 1u);
  EXPECT_EQ(all[0].pipeline, Pipeline{"t"});
}

TEST(GrammarParse, UndefinedNonterminal) {
  const std::string message = ParseError("<S> ::= <X>");
  EXPECT_NE(message.find("nonterminal <X> has no rules"), std::string::npos) << message;
  EXPECT_NE(message.find("line 1"), std::string::npos) << message;
}

TEST(GrammarParse, ErrorsCarryLineNumbers) {
  EXPECT_NE(ParseError("<S> ::= a\n<S> ::= b |").find("line 2"), std::string::npos);
  EXPECT_NE(ParseError("<S> ::= a\n<S> ::= b |").find("empty alternative"), std::string::npos);
  const std::string dup = ParseError("<S> ::= a | b\n\n<S> ::= a");
  EXPECT_NE(dup.find("line 3"), std::string::npos) << dup;
  EXPECT_NE(dup.find("duplicate rule"), std::string::npos) << dup;
  EXPECT_NE(ParseError("<S> ::= a b$").find("line 1"), std::string::npos);
  EXPECT_NE(ParseError("# only a comment\n").find("no rules"), std::string::npos);
}

TEST(GrammarParse, LineNumberOfGrammarError) {
  try {
    Grammar::Parse("<S> ::= <A>\n# comment\n<A> ::= <B> x");
    FAIL() << "expected a GrammarError";
  } catch (const GrammarError& e) {
    EXPECT_EQ(e.line(), 3);
  }
}

TEST(GrammarParse, CommentsAndStartSymbol) {
  const Grammar g = Grammar::Parse("# header\n<P> ::= <Q> x  # trailing\n<Q> ::= y | z\n");
  EXPECT_EQ(g.Display(g.start()), "<P>");
  EXPECT_EQ(g.num_rules(), 3);
  EXPECT_EQ(g.DisplayRule(2), "<Q> ::= z");
}

TEST(GrammarParse, SerializeRoundTrip) {
  for (const auto& g : {*ClassificationGrammar(), *ToyGrammar(),
                        Grammar::Parse("<S> ::= a | a <S>")}) {
    const Grammar again = Grammar::Parse(g.Serialize());
    EXPECT_EQ(again, g);
    EXPECT_EQ(again.Fingerprint(), g.Fingerprint());
  }
}

TEST(GrammarParse, ShippedGrammarShape) {
  const Grammar& g = *ClassificationGrammar();
  EXPECT_EQ(g.terminals().size(), 29u);
  EXPECT_EQ(g.RulesFor(g.start()).size(), 4u);
  const auto cleaners = g.ReachableTerminals(*g.FindNonterminal("DC"));
  const auto transforms = g.ReachableTerminals(*g.FindNonterminal("DT"));
  EXPECT_EQ(cleaners.size(), 2u);
  EXPECT_EQ(transforms.size(), 11u);
  const Grammar r = Grammar::Load(testing::GrammarPath("regression.grammar"));
  EXPECT_EQ(r.ReachableTerminals(*r.FindNonterminal("DC")).size(), 2u);
  EXPECT_EQ(r.ReachableTerminals(*r.FindNonterminal("DT")).size(), 11u);
  EXPECT_EQ(r.RulesFor(*r.FindNonterminal("E")).size(), 22u);
  EXPECT_EQ(g.RulesFor(*g.FindNonterminal("E")).size(), 16u);
}

TEST(GrammarDerivation, ApplicableRulesAtStart) {
  const Grammar& g = *ClassificationGrammar();
  const auto rules = ApplicableRules(g, Derivation::Start(g));
  EXPECT_EQ(rules, (std::vector<int>{0, 1, 2, 3}));
}

TEST(GrammarDerivation, CompleteHasNoRules) {
  const Grammar& g = *ClassificationGrammar();
  EXPECT_TRUE(ApplicableRules(g, FormOf(g, {"GaussianNB"})).empty());
}

TEST(GrammarDerivation, EstimatorRulesAfterCleaner) {
  const Grammar& g = *ClassificationGrammar();
  const auto rules = ApplicableRules(g, FormOf(g, {"SkImputer", "<E>"}));
  std::vector<int> expected;
  for (const auto& rule : g.rules()) {
    if (g.Display(rule.lhs) == "<E>") expected.push_back(rule.id);
  }
  EXPECT_EQ(rules, expected);
  EXPECT_EQ(rules.size(), 16u);
}

TEST(GrammarDerivation, ApplyRule) {
  const Grammar& g = *ClassificationGrammar();
  const Derivation start = Derivation::Start(g);
  const Derivation d1 = ApplyRule(g, start, 1);
  EXPECT_EQ(d1.symbols, FormOf(g, {"<DC>", "<E>"}).symbols);
  EXPECT_EQ(d1.applied, std::vector<int>{1});
  EXPECT_EQ(start.symbols.size(), 1u);  // input untouched

  int sk_only = -1;
  for (int id : g.RulesFor(*g.FindNonterminal("DC"))) {
    if (g.DisplayRule(id) == "<DC> ::= SkImputer") sk_only = id;
  }
  ASSERT_GE(sk_only, 0);
  const Derivation d2 = ApplyRule(g, d1, sk_only);
  EXPECT_EQ(d2.symbols, FormOf(g, {"SkImputer", "<E>"}).symbols);
}

TEST(GrammarDerivation, ApplyRuleRejectsInapplicable) {
  const Grammar& g = *ClassificationGrammar();
  try {
    ApplyRule(g, FormOf(g, {"<DC>", "<E>"}), 0);
    FAIL() << "expected std::invalid_argument";
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("<S>"), std::string::npos) << what;
    EXPECT_NE(what.find("<DC>"), std::string::npos) << what;
  }
  EXPECT_THROW(ApplyRule(g, FormOf(g, {"GaussianNB"}), 0), std::invalid_argument);
}

TEST(GrammarDerivation, IsComplete) {
  const Grammar& g = *ClassificationGrammar();
  EXPECT_TRUE(IsComplete(FormOf(g, {"SkImputer", "PCA", "LinearSVC"})));
  EXPECT_FALSE(IsComplete(FormOf(g, {"<DC>", "<E>"})));
  EXPECT_TRUE(IsComplete(Derivation{}));
}

TEST(GrammarDerivation, ReplayReproducesSymbols) {
  const Grammar& g = *ClassificationGrammar();
  for (const auto& p : EnumeratePipelines(g, 8)) {
    const Derivation d = Replay(g, p.rules);
    ASSERT_TRUE(IsComplete(d));
    ASSERT_EQ(ToPipeline(g, d), p.pipeline);
    ASSERT_EQ(d.applied, p.rules);
  }
  EXPECT_THROW(Replay(g, std::vector<int>{5}), std::invalid_argument);
}

TEST(GrammarEnumerate, UnaryLanguage) {
  const Grammar g = Grammar::Parse("<S> ::= a | a <S>");
  const auto all = EnumeratePipelines(g, 3);
  ASSERT_EQ(all.size(), 3u);
  EXPECT_EQ(all[0].pipeline, Pipeline{"a"});
  EXPECT_EQ(all[1].pipeline, (Pipeline{"a", "a"}));
  EXPECT_EQ(all[2].pipeline, (Pipeline{"a", "a", "a"}));
}

TEST(GrammarEnumerate, ToyLanguageHas27Pipelines) {
  const auto all = EnumeratePipelines(*ToyGrammar(), 3);
  EXPECT_EQ(all.size(), 27u);
  std::set<Pipeline> distinct;
  for (const auto& p : all) distinct.insert(p.pipeline);
  EXPECT_EQ(distinct.size(), 27u);
  for (std::size_t i = 1; i < all.size(); ++i) EXPECT_LT(all[i - 1].rules, all[i].rules);
}

TEST(GrammarEnumerate, ShippedLanguageSizes) {
  // Counted by tests/oracles/surrogate_oracle.py.
  EXPECT_EQ(EnumeratePipelines(*ClassificationGrammar(), 8).size(), 1920u);
  const Grammar r = Grammar::Load(testing::GrammarPath("regression.grammar"));
  EXPECT_EQ(EnumeratePipelines(r, 8).size(), 2640u);
}

TEST(GrammarEnumerate, EveryPipelineEndsInOneEstimator) {
  const Grammar& g = *ClassificationGrammar();
  std::set<std::string> estimators;
  for (const auto& s : g.ReachableTerminals(*g.FindNonterminal("E"))) estimators.insert(g.name(s));
  for (const auto& p : EnumeratePipelines(g, 8)) {
    int count = 0;
    for (const auto& t : p.pipeline) count += estimators.count(t);
    ASSERT_EQ(count, 1) << JoinPipeline(p.pipeline);
    ASSERT_TRUE(estimators.count(p.pipeline.back()));
    ASSERT_TRUE(Recognizes(g, p.pipeline));
  }
}

TEST(GrammarEnumerate, CapRespected) {
  const Grammar& g = *ClassificationGrammar();
  for (int cap = 1; cap <= 4; ++cap) {
    for (const auto& p : EnumeratePipelines(g, cap)) {
      ASSERT_LE(static_cast<int>(p.pipeline.size()), cap);
    }
  }
  EXPECT_EQ(EnumeratePipelines(g, 1).size(), 16u);
}

TEST(GrammarEnumerate, OverflowGuard) {
  EXPECT_THROW(EnumeratePipelines(*ClassificationGrammar(), 8, 100), EnumerationOverflow);
}

TEST(GrammarRecognize, AcceptsAndRejects) {
  const Grammar& g = *ClassificationGrammar();
  EXPECT_TRUE(Recognizes(g, Pipeline{"GaussianNB"}));
  EXPECT_TRUE(Recognizes(g, Pipeline{"SkImputer", "MissingIndicator", "OneHotEncoder", "PCA", "SVC"}));
  EXPECT_FALSE(Recognizes(g, Pipeline{"PCA", "SkImputer", "SVC"}));
  EXPECT_FALSE(Recognizes(g, Pipeline{"GaussianNB", "PCA"}));
  EXPECT_FALSE(Recognizes(g, Pipeline{}));
  EXPECT_FALSE(Recognizes(g, Pipeline{"NotAPrimitive"}));
}

TEST(GrammarRecursive, MinYieldAndRecursion) {
  const Grammar g = Grammar::Parse("<S> ::= <DC> e\n<DC> ::= c | c <DC>");
  EXPECT_EQ(g.MinYield(g.start()), 2);
  const auto all = EnumeratePipelines(g, 4);
  ASSERT_EQ(all.size(), 3u);
  EXPECT_EQ(all.back().pipeline, (Pipeline{"c", "c", "c", "e"}));
}

}  // namespace
}  // namespace pipesynth
