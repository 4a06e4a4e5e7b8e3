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

#include "pipesynth/executor_client.hpp"

#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <set>

#include "json.hpp"
#include "pipesynth/errors.hpp"

namespace pipesynth {

using nlohmann::json;

std::vector<std::string> SplitCommandLine(const std::string& command) {
  std::vector<std::string> out;
  std::string current;
  bool in_token = false;
  char quote = 0;
  for (char c : command) {
    if (quote) {
      if (c == quote) {
        quote = 0;
      } else {
        current += c;
      }
    } else if (c == '\'' || c == '"') {
      quote = c;
      in_token = true;
    } else if (c == ' ' || c == '\t' || c == '\n') {
      if (in_token) out.push_back(std::move(current));
      current.clear();
      in_token = false;
    } else {
      current += c;
      in_token = true;
    }
  }
  if (in_token) out.push_back(std::move(current));
  return out;
}

ExecutorClient::ExecutorClient(ExecutorOptions options)
    : options_(std::move(options)) {
  if (options_.argv.empty()) throw ConfigError("empty executor command");
}

ExecutorClient::~ExecutorClient() { Stop(); }

void ExecutorClient::Start() {
  std::lock_guard lock(mutex_);
  Spawn();
  Handshake();
}

void ExecutorClient::Spawn() {
  Stop();
  int fds[2];
  if (socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0) {
    throw ExecutorError(std::string("socketpair failed: ") + std::strerror(errno));
  }
  std::vector<char*> argv;
  for (auto& arg : options_.argv) argv.push_back(arg.data());
  argv.push_back(nullptr);

  const pid_t pid = fork();
  if (pid < 0) {
    close(fds[0]);
    close(fds[1]);
    throw ExecutorError(std::string("fork failed: ") + std::strerror(errno));
  }
  if (pid == 0) {
    dup2(fds[1], STDIN_FILENO);
    dup2(fds[1], STDOUT_FILENO);
    execvp(argv[0], argv.data());
    _exit(127);
  }
  close(fds[1]);
  pid_ = pid;
  fd_ = fds[0];
  buffer_.clear();
}

void ExecutorClient::Stop() {
  if (fd_ >= 0) {
    close(fd_);
    fd_ = -1;
  }
  if (pid_ > 0) {
    // Closing the socket delivers EOF; give the process a moment to exit.
    int status = 0;
    for (int i = 0; i < 50; ++i) {
      if (waitpid(pid_, &status, WNOHANG) == pid_) {
        pid_ = -1;
        return;
      }
      usleep(2000);
    }
    kill(pid_, SIGKILL);
    waitpid(pid_, &status, 0);
    pid_ = -1;
  }
}

bool ExecutorClient::SendLine(const std::string& line) {
  std::string data = line + "\n";
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

ExecutorClient::ReadStatus ExecutorClient::ReadLine(std::string& line) {
  const auto deadline = std::chrono::steady_clock::now() + options_.timeout;
  while (true) {
    if (auto pos = buffer_.find('\n'); pos != std::string::npos) {
      line = buffer_.substr(0, pos);
      buffer_.erase(0, pos + 1);
      return ReadStatus::kOk;
    }
    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) return ReadStatus::kTimeout;
    pollfd pfd{fd_, POLLIN, 0};
    const int ready = poll(&pfd, 1, static_cast<int>(std::min<long long>(
                                         remaining.count(), 1 << 30)));
    if (ready < 0) {
      if (errno == EINTR) continue;
      return ReadStatus::kClosed;
    }
    if (ready == 0) return ReadStatus::kTimeout;
    char chunk[4096];
    const ssize_t n = recv(fd_, chunk, sizeof(chunk), 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return ReadStatus::kClosed;
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

void ExecutorClient::Handshake() {
  const json hello = {{"op", "hello"}, {"protocol", kExecutorProtocolVersion}};
  if (!SendLine(hello.dump())) throw ExecutorError("executor closed its input");
  std::string line;
  switch (ReadLine(line)) {
    case ReadStatus::kClosed:
      throw ExecutorError("executor exited during handshake (command: " +
                          options_.argv.front() + ")");
    case ReadStatus::kTimeout:
      throw ExecutorError("executor handshake timed out");
    case ReadStatus::kOk:
      break;
  }
  json reply;
  try {
    reply = json::parse(line);
  } catch (const json::exception&) {
    throw ExecutorError("malformed handshake reply: " + line);
  }
  if (!reply.is_object() || reply.value("op", "") != "hello" ||
      reply.value("protocol", -1) != kExecutorProtocolVersion ||
      !reply.contains("primitives") || !reply["primitives"].is_array()) {
    throw ExecutorError("unexpected handshake reply: " + line);
  }
  primitives_.clear();
  for (const auto& p : reply["primitives"]) {
    if (!p.is_string()) throw ExecutorError("non-string primitive in handshake");
    primitives_.push_back(p.get<std::string>());
  }
}

void ExecutorClient::ValidatePrimitives(const Grammar& grammar) const {
  const std::set<std::string> offered(primitives_.begin(), primitives_.end());
  std::string missing;
  for (const auto& t : grammar.terminals()) {
    if (!offered.contains(t)) missing += (missing.empty() ? "" : ", ") + t;
  }
  if (!missing.empty()) {
    throw ExecutorError("executor does not provide grammar primitives: " + missing);
  }
}

EvaluationResult ExecutorClient::Evaluate(const Pipeline& pipeline,
                                          const DatasetEntry& dataset) {
  std::lock_guard lock(mutex_);
  for (int attempt = 0;; ++attempt) {
    if (fd_ < 0) {
      Spawn();
      Handshake();
    }
    const std::int64_t id = next_id_++;
    const json request = {{"id", id},
                          {"op", "evaluate"},
                          {"pipeline", pipeline},
                          {"dataset", dataset.path.string()},
                          {"task", std::string(TaskName(dataset.task.kind))},
                          {"metric", std::string(MetricName(dataset.task.metric))},
                          {"target_column", dataset.target_column},
                          {"seed", options_.seed}};
    std::string line;
    ReadStatus status = SendLine(request.dump()) ? ReadLine(line) : ReadStatus::kClosed;
    if (status == ReadStatus::kTimeout) {
      // The stream is out of sync with the pending request; start over.
      Stop();
      return EvaluationResult::ExecutorFailure("executor timed out after " +
                                               std::to_string(options_.timeout.count()) +
                                               " ms");
    }
    if (status == ReadStatus::kClosed) {
      Stop();
      if (attempt >= options_.retries) {
        throw ExecutorError("executor crashed while evaluating [" +
                            JoinPipeline(pipeline) + "]");
      }
      continue;
    }

    json response;
    try {
      response = json::parse(line);
    } catch (const json::exception&) {
      return EvaluationResult::ExecutorFailure("malformed response: " + line);
    }
    if (!response.is_object() || !response.contains("id") ||
        !response["id"].is_number_integer() || response["id"].get<std::int64_t>() != id ||
        !response.contains("status") || !response["status"].is_string()) {
      return EvaluationResult::ExecutorFailure("protocol violation: " + line);
    }
    const std::string message =
        response.contains("message") && response["message"].is_string()
            ? response["message"].get<std::string>()
            : std::string();
    const std::string status_name = response["status"].get<std::string>();
    if (status_name == "ok") {
      if (!response.contains("score") || !response["score"].is_number()) {
        return EvaluationResult::ExecutorFailure("ok response without score");
      }
      const double score = response["score"].get<double>();
      if (!std::isfinite(score)) {
        return EvaluationResult::ExecutorFailure("non-finite score");
      }
      return EvaluationResult::Ok(score);
    }
    if (status_name == "invalid_pipeline") return EvaluationResult::Invalid(message);
    if (status_name == "error") return EvaluationResult::ExecutorFailure(message);
    return EvaluationResult::ExecutorFailure("unknown status " + status_name);
  }
}

}  // namespace pipesynth
