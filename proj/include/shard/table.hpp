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

#ifndef SHARD_TABLE_HPP
#define SHARD_TABLE_HPP

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "shard/column.hpp"
#include "shard/schema.hpp"

namespace shard {

/**
 * Immutable columnar relation. Columns are shared between tables, so
 * projections and pass-throughs never copy value buffers.
 */
class Table {
 public:
  using ColumnPtr = std::shared_ptr<const Column>;

  Table() = default;
  Table(Schema schema, std::vector<ColumnPtr> columns);
  Table(Schema schema, std::vector<Column> columns);

  static Table Empty(const Schema &schema);
  /// Row-major construction; used mostly by tests and small fixtures.
  static Table FromRows(const Schema &schema, const std::vector<std::vector<Value>> &rows);
  /// Concatenation under `schema`; parts must be type-compatible with it.
  static Table Concat(const Schema &schema, std::span<const Table> parts);

  const Schema &schema() const { return schema_; }
  int num_columns() const { return schema_.num_fields(); }
  int64_t num_rows() const { return num_rows_; }
  const Column &column(int i) const { return *columns_.at(static_cast<size_t>(i)); }
  const ColumnPtr &column_ptr(int i) const { return columns_.at(static_cast<size_t>(i)); }
  const std::vector<ColumnPtr> &columns() const { return columns_; }

  Value value(int col, int64_t row) const { return column(col).value(row); }
  std::vector<Value> row(int64_t i) const;
  std::vector<std::vector<Value>> rows() const;

  /// Gathers rows; index -1 yields an all-null row.
  Table Take(std::span<const int64_t> indices) const;

  /// Same data under a different (type-compatible) schema.
  Table WithSchema(Schema schema) const;

  /// Pretty-printed preview of up to max_rows rows.
  std::string ToString(int64_t max_rows = 20) const;

 private:
  Schema schema_;
  std::vector<ColumnPtr> columns_;
  int64_t num_rows_ = 0;
};

/**
 * Value equality: identical schema and row count, identical null positions,
 * equal cells. Float64 cells compare by bit pattern, with every NaN equal to
 * every other NaN. Whether a column carries a bitmap does not matter.
 */
bool ValueEquals(const Table &a, const Table &b);

inline bool operator==(const Table &a, const Table &b) { return ValueEquals(a, b); }

}  // namespace shard

#endif  // SHARD_TABLE_HPP
