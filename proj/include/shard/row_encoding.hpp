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

#ifndef SHARD_ROW_ENCODING_HPP
#define SHARD_ROW_ENCODING_HPP

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "shard/table.hpp"

namespace shard {

/**
 * Canonical bytes for a subset of one row's cells. Per cell: a tag byte
 * (0 = null, 1 = present) followed, when present, by
 *   Int64   8 bytes little-endian two's complement
 *   Float64 8 bytes little-endian IEEE bits, NaN -> 0x7ff8000000000000, -0.0 -> +0.0
 *   Bool    1 byte
 *   Utf8    4-byte little-endian length, then the bytes
 * Equal encodings are the engine's definition of key and row equality.
 */
struct RowEncoding {
  std::string bytes;

  std::span<const uint8_t> span() const {
    return {reinterpret_cast<const uint8_t *>(bytes.data()), bytes.size()};
  }
  bool operator==(const RowEncoding &) const = default;
  auto operator<=>(const RowEncoding &) const = default;
};

/// Throws IndexError for an out-of-range row or column.
RowEncoding EncodeRow(const Table &table, int64_t row, std::span<const int> cols);

/// FNV-1a 64-bit.
uint64_t HashRow(std::span<const uint8_t> bytes);
inline uint64_t HashRow(std::string_view bytes) {
  return HashRow({reinterpret_cast<const uint8_t *>(bytes.data()), bytes.size()});
}
inline uint64_t HashRow(const RowEncoding &enc) { return HashRow(enc.span()); }

/// Encodings of every row of a table over a fixed column list, in one arena.
class EncodedRows {
 public:
  EncodedRows() = default;
  EncodedRows(const Table &table, std::span<const int> cols);

  int64_t size() const { return static_cast<int64_t>(offsets_.size()) - 1; }
  std::string_view operator[](int64_t row) const {
    return std::string_view(bytes_).substr(offsets_[row], offsets_[row + 1] - offsets_[row]);
  }
  uint64_t hash(int64_t row) const { return HashRow((*this)[row]); }

 private:
  std::string bytes_;
  std::vector<size_t> offsets_{0};
};

/// Validates column indices against a table; throws IndexError.
void CheckColumnIndices(const Table &table, std::span<const int> cols);

/// Throws KeyNullError if any of `cols` contains a null.
void CheckNoNulls(const Table &table, std::span<const int> cols, std::string_view what);

/// All column indices of a table, 0..n-1.
std::vector<int> AllColumns(const Table &table);

/**
 * Rows stably ordered by the byte-wise lexicographic order of their
 * all-column encodings. Test normalisation; operators never call it.
 */
Table CanonicalSort(const Table &table);

}  // namespace shard

#endif  // SHARD_ROW_ENCODING_HPP
