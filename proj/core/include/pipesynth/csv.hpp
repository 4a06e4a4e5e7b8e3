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

#ifndef PIPESYNTH_CSV_H_
#define PIPESYNTH_CSV_H_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pipesynth {

// Column-major table of raw cell strings with a header row.
struct Table {
  std::vector<std::string> column_names;
  std::vector<std::vector<std::string>> columns;

  std::size_t num_rows() const { return columns.empty() ? 0 : columns[0].size(); }
  std::size_t num_columns() const { return columns.size(); }
  std::optional<std::size_t> ColumnIndex(std::string_view name) const;
};

// Parses comma-separated text with an RFC 4180 style quoting subset
// (double-quoted fields, "" escapes). Throws ConfigError on ragged rows.
Table ParseCsv(std::string_view text);
Table ReadCsv(const std::filesystem::path& path);

}  // namespace pipesynth

#endif  // PIPESYNTH_CSV_H_
