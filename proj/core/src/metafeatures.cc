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

#include "pipesynth/metafeatures.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <string>

#include "pipesynth/errors.hpp"
#include "pipesynth/hashing.hpp"

namespace pipesynth {
namespace {

bool ParsesAsNumber(std::string_view cell) {
  while (!cell.empty() && cell.front() == ' ') cell.remove_prefix(1);
  while (!cell.empty() && cell.back() == ' ') cell.remove_suffix(1);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(cell.data(), cell.data() + cell.size(), value);
  return ec == std::errc() && ptr == cell.data() + cell.size();
}

}  // namespace

TaskSpec TaskSpec::FromName(std::string_view name) {
  if (name == "classification") return Classification();
  if (name == "regression") return Regression();
  throw ConfigError("unknown task '" + std::string(name) +
                    "' (expected classification or regression)");
}

std::string_view TaskName(TaskKind kind) {
  return kind == TaskKind::kClassification ? "classification" : "regression";
}

std::string_view MetricName(Metric metric) {
  return metric == Metric::kF1 ? "f1" : "r2";
}

const std::array<std::string_view, kNumMetaFeatures>& MetaFeatureSlots() {
  static const std::array<std::string_view, kNumMetaFeatures> kSlots = {
      "log1p_rows",   "log1p_columns", "fraction_missing",
      "fraction_categorical", "n_classes", "class_entropy",
      "rows_per_column", "bias"};
  return kSlots;
}

bool IsMissingCell(std::string_view cell) {
  return cell.empty() || cell == "NA" || cell == "N/A" || cell == "NaN" ||
         cell == "nan" || cell == "null" || cell == "?";
}

MetaFeatures ComputeMetaFeatures(const Table& table, std::string_view target,
                                 const TaskSpec& task) {
  const auto target_index = table.ColumnIndex(target);
  if (!target_index) {
    throw ConfigError("target column '" + std::string(target) +
                      "' not found in dataset");
  }
  const std::size_t rows = table.num_rows();
  if (rows == 0) throw ConfigError("dataset has zero rows");

  std::size_t feature_columns = 0;
  std::size_t categorical_columns = 0;
  std::size_t missing_cells = 0;
  for (std::size_t c = 0; c < table.num_columns(); ++c) {
    if (c == *target_index) continue;
    ++feature_columns;
    bool categorical = false;
    for (const auto& cell : table.columns[c]) {
      if (IsMissingCell(cell)) {
        ++missing_cells;
      } else if (!categorical && !ParsesAsNumber(cell)) {
        categorical = true;
      }
    }
    if (categorical) ++categorical_columns;
  }

  MetaFeatures out{};
  out[0] = std::log1p(static_cast<double>(rows));
  out[1] = std::log1p(static_cast<double>(feature_columns));
  out[2] = feature_columns == 0
               ? 0.0
               : static_cast<double>(missing_cells) /
                     static_cast<double>(rows * feature_columns);
  out[3] = feature_columns == 0 ? 0.0
                                : static_cast<double>(categorical_columns) /
                                      static_cast<double>(feature_columns);
  if (task.kind == TaskKind::kClassification) {
    std::map<std::string, std::size_t> counts;
    std::size_t labelled = 0;
    for (const auto& cell : table.columns[*target_index]) {
      if (IsMissingCell(cell)) continue;
      ++counts[cell];
      ++labelled;
    }
    double entropy = 0.0;
    for (const auto& [label, count] : counts) {
      const double p = static_cast<double>(count) / static_cast<double>(labelled);
      entropy -= p * std::log(p);
    }
    out[4] = static_cast<double>(counts.size());
    out[5] = std::max(0.0, entropy);
  }
  out[6] = std::min(1000.0, static_cast<double>(rows) /
                                static_cast<double>(std::max<std::size_t>(feature_columns, 1)));
  out[7] = 1.0;
  return out;
}

MetaFeatures SurrogateMetaFeatures(std::uint64_t seed) {
  MetaFeatures out{};
  const auto& slots = MetaFeatureSlots();
  for (std::size_t i = 0; i + 1 < kNumMetaFeatures; ++i) {
    out[i] = HashToUnit(seed, "meta:" + std::string(slots[i]));
  }
  out[kNumMetaFeatures - 1] = 1.0;
  return out;
}

}  // namespace pipesynth
