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

#ifndef PIPESYNTH_EXECUTOR_CLIENT_H_
#define PIPESYNTH_EXECUTOR_CLIENT_H_

// Client side of the executor protocol: newline-delimited JSON over the
// standard input/output of a child process.
//
//   -> {"op":"hello","protocol":1}
//   <- {"op":"hello","protocol":1,"primitives":[...]}
//   -> {"id":7,"op":"evaluate","pipeline":["SkImputer","GaussianNB"],
//       "dataset":"/data/iris.csv","task":"classification","metric":"f1",
//       "target_column":"species","seed":0}
//   <- {"id":7,"status":"ok","score":0.93}
//
// Response status is one of ok, invalid_pipeline, error.

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "pipesynth/evaluator.hpp"

namespace pipesynth {

inline constexpr int kExecutorProtocolVersion = 1;

struct ExecutorOptions {
  std::vector<std::string> argv;
  std::chrono::milliseconds timeout{300000};
  // Restarts allowed per request after the executor dies.
  int retries = 1;
  std::uint64_t seed = 0;
};

// Splits a command line on whitespace, honouring single and double quotes.
std::vector<std::string> SplitCommandLine(const std::string& command);

// One executor process with a single in-flight request.
class ExecutorClient {
 public:
  explicit ExecutorClient(ExecutorOptions options);
  ~ExecutorClient();
  ExecutorClient(const ExecutorClient&) = delete;
  ExecutorClient& operator=(const ExecutorClient&) = delete;

  // Spawns the process and performs the handshake. Throws ExecutorError.
  void Start();

  const std::vector<std::string>& primitives() const { return primitives_; }

  // Throws ExecutorError listing grammar terminals the executor lacks.
  void ValidatePrimitives(const Grammar& grammar) const;

  // Protocol violations and timeouts come back as executor_error results.
  // A crashed executor is restarted up to `retries` times before
  // ExecutorError is thrown.
  EvaluationResult Evaluate(const Pipeline& pipeline, const DatasetEntry& dataset);

 private:
  void Spawn();
  void Stop();
  void Handshake();
  // Returns false on EOF or write failure (process gone).
  bool SendLine(const std::string& line);
  enum class ReadStatus { kOk, kClosed, kTimeout };
  ReadStatus ReadLine(std::string& line);

  ExecutorOptions options_;
  std::vector<std::string> primitives_;
  int pid_ = -1;
  int fd_ = -1;
  std::string buffer_;
  std::int64_t next_id_ = 1;
  std::mutex mutex_;
};

// Adapts an executor connection to one dataset.
class ExternalEvaluator : public PipelineEvaluator {
 public:
  ExternalEvaluator(std::shared_ptr<ExecutorClient> client, DatasetEntry dataset)
      : client_(std::move(client)), dataset_(std::move(dataset)) {}
  EvaluationResult Evaluate(const Pipeline& pipeline) override {
    return client_->Evaluate(pipeline, dataset_);
  }
  std::string identity() const override { return "external:" + dataset_.name; }

 private:
  std::shared_ptr<ExecutorClient> client_;
  DatasetEntry dataset_;
};

}  // namespace pipesynth

#endif  // PIPESYNTH_EXECUTOR_CLIENT_H_
