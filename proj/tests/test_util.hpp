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


#ifndef PIPESYNTH_TESTS_TEST_UTIL_H_
#define PIPESYNTH_TESTS_TEST_UTIL_H_

#include <filesystem>
#include <memory>
#include <string>

#include "pipesynth/grammar.hpp"

namespace pipesynth::testing {

inline std::filesystem::path GrammarPath(const std::string& name) {
  return std::filesystem::path(PIPESYNTH_TEST_GRAMMAR_DIR) / name;
}

inline std::filesystem::path DataPath(const std::string& name) {
  return std::filesystem::path(PIPESYNTH_TEST_DATA_DIR) / name;
}

inline std::shared_ptr<const Grammar> ClassificationGrammar() {
  static const auto grammar = std::make_shared<const Grammar>(
      Grammar::Load(GrammarPath("classification.grammar")));
  return grammar;
}

inline std::shared_ptr<const Grammar> ToyGrammar() {
  static const auto grammar =
      std::make_shared<const Grammar>(Grammar::Load(DataPath("toy.grammar")));
  return grammar;
}

inline std::shared_ptr<const Grammar> ParseShared(std::string_view text) {
  return std::make_shared<const Grammar>(Grammar::Parse(text));
}

}  // namespace pipesynth::testing

#endif  // PIPESYNTH_TESTS_TEST_UTIL_H_
