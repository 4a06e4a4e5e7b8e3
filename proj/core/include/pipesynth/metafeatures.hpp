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

#ifndef PIPESYNTH_METAFEATURES_H_
#define PIPESYNTH_METAFEATURES_H_

#include <array>
#include <cstdint>
#include <string_view>

#include "pipesynth/csv.hpp"
#include "pipesynth/task.hpp"

namespace pipesynth {

inline constexpr std::size_t kNumMetaFeatures = 8;

// Dataset summary fed to the network next to the pipeline tokens. Slot order:
//
//   0  log(1 + rows)
//   1  log(1 + feature columns)
//   2  fraction of missing feature cells
//   3  fraction of categorical feature columns
//   4  number of classes (0 for regression)
//   5  class entropy in nats (0 for regression)
//   6  rows / feature columns, capped at 1000
//   7  constant 1
//
// The slot names are stored in checkpoints.
using MetaFeatures = std::array<double, kNumMetaFeatures>;

const std::array<std::string_view, kNumMetaFeatures>& MetaFeatureSlots();

// A cell is missing when empty or one of NA, N/A, NaN, nan, null, ?.
bool IsMissingCell(std::string_view cell);

// Throws ConfigError if the target column is absent or the table has no rows.
// Feature columns are all columns except the target. A column is
// categorical when any non-missing cell fails to parse as a number.
MetaFeatures ComputeMetaFeatures(const Table& table, std::string_view target,
                                 const TaskSpec& task);

// Stand-in vector for a surrogate dataset: slot i (except the constant) is
// HashToUnit(seed, "meta:" + slot name), so every slot lies in [0, 1).
MetaFeatures SurrogateMetaFeatures(std::uint64_t seed);

}  // namespace pipesynth

#endif  // PIPESYNTH_METAFEATURES_H_
