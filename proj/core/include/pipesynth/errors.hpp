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

#ifndef PIPESYNTH_ERRORS_H_
#define PIPESYNTH_ERRORS_H_

#include <stdexcept>
#include <string>

namespace pipesynth {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed grammar text. `line()` is 1-based, 0 when not tied to a line.
class GrammarError : public Error {
 public:
  GrammarError(int line, const std::string& message)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + message
                       : message),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Invalid user configuration (flags, files, budgets, mismatched checkpoints).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// The external executor could not be reached or broke the protocol.
class ExecutorError : public Error {
 public:
  using Error::Error;
};

}  // namespace pipesynth

#endif  // PIPESYNTH_ERRORS_H_
