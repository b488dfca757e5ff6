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

#ifndef SHARD_COLUMN_HPP
#define SHARD_COLUMN_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "shard/schema.hpp"

namespace shard {

/// A single cell. monostate is the null cell.
using Value = std::variant<std::monostate, int64_t, double, std::string, bool>;

std::string ValueToString(const Value &value);

/// Utf8 storage: offsets has length + 1 entries, first 0, last == data.size().
struct StringBuffer {
  std::vector<int64_t> offsets{0};
  std::string data;

  int64_t size() const { return static_cast<int64_t>(offsets.size()) - 1; }
  std::string_view at(int64_t i) const {
    return std::string_view(data).substr(static_cast<size_t>(offsets[i]),
                                         static_cast<size_t>(offsets[i + 1] - offsets[i]));
  }
};

/// LSB-first validity bitmap helpers (bit set = value present).
inline bool BitIsSet(std::span<const uint8_t> bitmap, int64_t i) {
  return (bitmap[static_cast<size_t>(i >> 3)] >> (i & 7)) & 1u;
}
inline void SetBit(std::vector<uint8_t> &bitmap, int64_t i, bool value) {
  auto &byte = bitmap[static_cast<size_t>(i >> 3)];
  if (value) {
    byte = static_cast<uint8_t>(byte | (1u << (i & 7)));
  } else {
    byte = static_cast<uint8_t>(byte & ~(1u << (i & 7)));
  }
}
inline size_t BitmapBytes(int64_t length) { return static_cast<size_t>((length + 7) / 8); }

/**
 * Immutable typed value buffer with an optional validity bitmap.
 *
 * Bool values are stored one byte per value (0 or 1). Cells masked out by the
 * validity bitmap hold a zero / empty placeholder.
 */
class Column {
 public:
  /// Alternative index matches the DataType code.
  using Storage =
      std::variant<std::vector<int64_t>, std::vector<double>, StringBuffer, std::vector<uint8_t>>;

  Column() : Column(Storage{std::vector<int64_t>{}}, std::nullopt) {}

  static Column Int64(std::vector<int64_t> values,
                      std::optional<std::vector<uint8_t>> validity = std::nullopt);
  static Column Float64(std::vector<double> values,
                        std::optional<std::vector<uint8_t>> validity = std::nullopt);
  static Column Bool(std::vector<uint8_t> values,
                     std::optional<std::vector<uint8_t>> validity = std::nullopt);
  static Column Utf8(StringBuffer values,
                     std::optional<std::vector<uint8_t>> validity = std::nullopt);
  static Column Utf8(const std::vector<std::string> &values,
                     std::optional<std::vector<uint8_t>> validity = std::nullopt);
  static Column Empty(DataType type);

  DataType dtype() const { return static_cast<DataType>(storage_.index()); }
  int64_t length() const { return length_; }

  bool has_validity() const { return validity_.has_value(); }
  bool is_valid(int64_t i) const { return !validity_ || BitIsSet(*validity_, i); }
  bool is_null(int64_t i) const { return !is_valid(i); }
  int64_t null_count() const;
  /// Empty span when the column has no bitmap.
  std::span<const uint8_t> validity_bitmap() const;

  std::span<const int64_t> int64_values() const { return std::get<0>(storage_); }
  std::span<const double> float64_values() const { return std::get<1>(storage_); }
  const StringBuffer &utf8_values() const { return std::get<2>(storage_); }
  std::span<const uint8_t> bool_values() const { return std::get<3>(storage_); }
  const Storage &storage() const { return storage_; }

  Value value(int64_t i) const;

  /// Gathers rows by index; index -1 yields a null cell.
  Column Take(std::span<const int64_t> indices) const;

  /// Concatenates same-typed columns.
  static Column Concat(std::span<const Column *const> parts);

 private:
  Column(Storage storage, std::optional<std::vector<uint8_t>> validity);

  Storage storage_;
  int64_t length_ = 0;
  std::optional<std::vector<uint8_t>> validity_;
};

/// Incremental column construction, used by CSV ingestion and tests.
class ColumnBuilder {
 public:
  explicit ColumnBuilder(DataType type);

  DataType dtype() const { return type_; }
  int64_t length() const { return length_; }

  void Reserve(int64_t n);
  void AppendNull();
  void AppendInt64(int64_t v);
  void AppendFloat64(double v);
  void AppendBool(bool v);
  void AppendString(std::string_view v);
  /// Throws SchemaMismatch when the value's type is not the builder's type.
  void Append(const Value &value);

  Column Finish();

 private:
  void MarkValid(bool valid);

  DataType type_;
  int64_t length_ = 0;
  Column::Storage storage_;
  std::vector<uint8_t> validity_;
  bool any_null_ = false;
};

}  // namespace shard

#endif  // SHARD_COLUMN_HPP
