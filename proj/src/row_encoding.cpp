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

#include "shard/row_encoding.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "shard/error.hpp"

namespace shard {

namespace {

constexpr uint64_t kFnvOffsetBasis = 14695981039346656037ULL;
constexpr uint64_t kFnvPrime = 1099511628211ULL;
constexpr uint64_t kCanonicalNaN = 0x7ff8000000000000ULL;

inline char *PutLE64(char *out, uint64_t v) {
  for (int i = 0; i < 8; ++i) *out++ = static_cast<char>((v >> (8 * i)) & 0xff);
  return out;
}

inline char *PutLE32(char *out, uint32_t v) {
  for (int i = 0; i < 4; ++i) *out++ = static_cast<char>((v >> (8 * i)) & 0xff);
  return out;
}

inline uint64_t CanonicalBits(double v) {
  if (std::isnan(v)) return kCanonicalNaN;
  if (v == 0.0) return 0;
  return std::bit_cast<uint64_t>(v);
}

size_t CellSize(const Column &col, int64_t row) {
  if (!col.is_valid(row)) return 1;
  switch (col.dtype()) {
    case DataType::kInt64:
    case DataType::kFloat64: return 9;
    case DataType::kBool: return 2;
    case DataType::kUtf8: {
      const auto &buf = col.utf8_values();
      return 5 + static_cast<size_t>(buf.offsets[row + 1] - buf.offsets[row]);
    }
  }
  return 1;
}

char *WriteCell(const Column &col, int64_t row, char *out) {
  if (!col.is_valid(row)) {
    *out++ = 0;
    return out;
  }
  *out++ = 1;
  switch (col.dtype()) {
    case DataType::kInt64:
      return PutLE64(out, static_cast<uint64_t>(col.int64_values()[row]));
    case DataType::kFloat64:
      return PutLE64(out, CanonicalBits(col.float64_values()[row]));
    case DataType::kBool:
      *out++ = static_cast<char>(col.bool_values()[row]);
      return out;
    case DataType::kUtf8: {
      const auto s = col.utf8_values().at(row);
      out = PutLE32(out, static_cast<uint32_t>(s.size()));
      return std::copy(s.begin(), s.end(), out);
    }
  }
  return out;
}

}  // namespace

void CheckColumnIndices(const Table &table, std::span<const int> cols) {
  for (int c : cols) {
    if (c < 0 || c >= table.num_columns()) {
      throw Error(ErrorCode::kIndex, "column index " + std::to_string(c) + " out of range for " +
                                         std::to_string(table.num_columns()) + " columns");
    }
  }
}

void CheckNoNulls(const Table &table, std::span<const int> cols, std::string_view what) {
  for (int c : cols) {
    if (table.column(c).null_count() > 0) {
      throw Error(ErrorCode::kKeyNull, std::string(what) + " key column " + std::to_string(c) +
                                           " (" + table.schema().field(c).name + ") contains nulls");
    }
  }
}

std::vector<int> AllColumns(const Table &table) {
  std::vector<int> cols(static_cast<size_t>(table.num_columns()));
  std::iota(cols.begin(), cols.end(), 0);
  return cols;
}

RowEncoding EncodeRow(const Table &table, int64_t row, std::span<const int> cols) {
  if (row < 0 || row >= table.num_rows()) {
    throw Error(ErrorCode::kIndex, "row " + std::to_string(row) + " out of range");
  }
  CheckColumnIndices(table, cols);
  size_t size = 0;
  for (int c : cols) size += CellSize(table.column(c), row);
  RowEncoding enc;
  enc.bytes.resize(size);
  char *out = enc.bytes.data();
  for (int c : cols) out = WriteCell(table.column(c), row, out);
  return enc;
}

uint64_t HashRow(std::span<const uint8_t> bytes) {
  uint64_t h = kFnvOffsetBasis;
  for (uint8_t b : bytes) {
    h ^= b;
    h *= kFnvPrime;
  }
  return h;
}

EncodedRows::EncodedRows(const Table &table, std::span<const int> cols) {
  CheckColumnIndices(table, cols);
  const int64_t n = table.num_rows();
  offsets_.assign(static_cast<size_t>(n) + 1, 0);
  // Sizes first, column by column, so the arena is allocated once.
  for (int c : cols) {
    const auto &col = table.column(c);
    if (!col.has_validity() && col.dtype() != DataType::kUtf8) {
      const size_t w = col.dtype() == DataType::kBool ? 2 : 9;
      for (int64_t r = 0; r < n; ++r) offsets_[r + 1] += w;
    } else {
      for (int64_t r = 0; r < n; ++r) offsets_[r + 1] += CellSize(col, r);
    }
  }
  for (int64_t r = 0; r < n; ++r) offsets_[r + 1] += offsets_[r];
  bytes_.resize(offsets_.back());
  std::vector<size_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (int c : cols) {
    const auto &col = table.column(c);
    for (int64_t r = 0; r < n; ++r) {
      char *start = bytes_.data() + cursor[r];
      cursor[r] += static_cast<size_t>(WriteCell(col, r, start) - start);
    }
  }
}

Table CanonicalSort(const Table &table) {
  const auto cols = AllColumns(table);
  EncodedRows enc(table, cols);
  std::vector<int64_t> order(static_cast<size_t>(table.num_rows()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int64_t a, int64_t b) { return enc[a] < enc[b]; });
  return table.Take(order);
}

}  // namespace shard
