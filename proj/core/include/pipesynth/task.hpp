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

#ifndef PIPESYNTH_TASK_H_
#define PIPESYNTH_TASK_H_

#include <string>
#include <string_view>

namespace pipesynth {

enum class TaskKind { kClassification, kRegression };
enum class Metric { kF1, kR2 };

// A machine-learning task. The metric is tied to the kind:
// f1 for classification, r2 for regression.
struct TaskSpec {
  TaskKind kind = TaskKind::kClassification;
  Metric metric = Metric::kF1;

  static TaskSpec Classification() { return {TaskKind::kClassification, Metric::kF1}; }
  static TaskSpec Regression() { return {TaskKind::kRegression, Metric::kR2}; }
  // Parses "classification" or "regression"; throws ConfigError otherwise.
  static TaskSpec FromName(std::string_view name);

  bool consistent() const {
    return (kind == TaskKind::kClassification) == (metric == Metric::kF1);
  }

  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

std::string_view TaskName(TaskKind kind);
std::string_view MetricName(Metric metric);

}  // namespace pipesynth

#endif  // PIPESYNTH_TASK_H_
