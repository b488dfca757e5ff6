/*
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SHARD_CSV_HPP
#define SHARD_CSV_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shard/table.hpp"

namespace shard {

/// Number of leading data rows consulted when dtypes are inferred.
inline constexpr int kInferenceRows = 100;

struct CsvReadOptions {
  char delimiter = ',';
  bool has_header = true;
  /// Overrides inference when set; must match the field count.
  std::optional<std::vector<DataType>> dtypes;
};

struct CsvWriteOptions {
  char delimiter = ',';
  bool write_header = true;
};

/**
 * Reads a delimited file into a table.
 *
 * Quoted fields are honoured ("" escapes a quote) but may not span lines.
 * An unquoted empty field is an error: ingestion never produces nulls.
 * Inferred columns try Int64, then Float64, then Bool, then fall back to Utf8.
 * Without a header, columns are named c0, c1, ...
 */
Table ReadCsv(const std::filesystem::path &path, const CsvReadOptions &options = {});
Table ReadCsvString(std::string_view text, const CsvReadOptions &options = {});

/**
 * Writes records separated by '\n' (no trailing newline). Nulls become empty
 * fields; Utf8 cells that are empty or contain the delimiter, a quote or a
 * line break are quoted.
 */
void WriteCsv(const Table &table, const std::filesystem::path &path,
              const CsvWriteOptions &options = {});
std::string WriteCsvString(const Table &table, const CsvWriteOptions &options = {});

}  // namespace shard

#endif  // SHARD_CSV_HPP
