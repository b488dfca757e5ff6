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

#include "shard/table.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

#include "shard/error.hpp"

namespace shard {

Table::Table(Schema schema, std::vector<ColumnPtr> columns)
    : schema_(std::move(schema)), columns_(std::move(columns)) {
  if (static_cast<int>(columns_.size()) != schema_.num_fields()) {
    throw Error(ErrorCode::kSchemaMismatch,
                "schema has " + std::to_string(schema_.num_fields()) + " fields but " +
                    std::to_string(columns_.size()) + " columns were supplied");
  }
  for (size_t i = 0; i < columns_.size(); ++i) {
    if (!columns_[i]) throw Error(ErrorCode::kConfig, "null column pointer");
    if (columns_[i]->dtype() != schema_.fields()[i].dtype) {
      throw Error(ErrorCode::kSchemaMismatch, "column " + std::to_string(i) + " dtype " +
                                                  std::string(DataTypeName(columns_[i]->dtype())) +
                                                  " does not match field " + schema_.fields()[i].name);
    }
    if (i == 0) {
      num_rows_ = columns_[0]->length();
    } else if (columns_[i]->length() != num_rows_) {
      throw Error(ErrorCode::kSchemaMismatch, "columns have unequal lengths");
    }
  }
}

Table::Table(Schema schema, std::vector<Column> columns)
    : Table(std::move(schema), [&] {
        std::vector<ColumnPtr> ptrs;
        ptrs.reserve(columns.size());
        for (auto &c : columns) ptrs.push_back(std::make_shared<const Column>(std::move(c)));
        return ptrs;
      }()) {}

Table Table::Empty(const Schema &schema) {
  std::vector<Column> cols;
  for (const auto &f : schema.fields()) cols.push_back(Column::Empty(f.dtype));
  return Table(schema, std::move(cols));
}

Table Table::FromRows(const Schema &schema, const std::vector<std::vector<Value>> &rows) {
  std::vector<ColumnBuilder> builders;
  for (const auto &f : schema.fields()) builders.emplace_back(f.dtype);
  for (size_t r = 0; r < rows.size(); ++r) {
    if (static_cast<int>(rows[r].size()) != schema.num_fields()) {
      throw Error(ErrorCode::kSchemaMismatch, "row " + std::to_string(r) + " has wrong arity");
    }
    for (size_t c = 0; c < builders.size(); ++c) builders[c].Append(rows[r][c]);
  }
  std::vector<Column> cols;
  for (auto &b : builders) cols.push_back(b.Finish());
  return Table(schema, std::move(cols));
}

Table Table::Concat(const Schema &schema, std::span<const Table> parts) {
  for (const auto &p : parts) {
    if (!p.schema().type_compatible(schema)) {
      throw Error(ErrorCode::kSchemaMismatch,
                  "cannot concatenate " + p.schema().ToString() + " under " + schema.ToString());
    }
  }
  if (parts.size() == 1) return parts.front().WithSchema(schema);
  if (parts.empty()) return Empty(schema);
  std::vector<ColumnPtr> cols;
  for (int c = 0; c < schema.num_fields(); ++c) {
    std::vector<const Column *> pieces;
    pieces.reserve(parts.size());
    for (const auto &p : parts) pieces.push_back(&p.column(c));
    cols.push_back(std::make_shared<const Column>(Column::Concat(pieces)));
  }
  return Table(schema, std::move(cols));
}

std::vector<Value> Table::row(int64_t i) const {
  std::vector<Value> out;
  out.reserve(columns_.size());
  for (const auto &c : columns_) out.push_back(c->value(i));
  return out;
}

std::vector<std::vector<Value>> Table::rows() const {
  std::vector<std::vector<Value>> out;
  out.reserve(static_cast<size_t>(num_rows_));
  for (int64_t i = 0; i < num_rows_; ++i) out.push_back(row(i));
  return out;
}

Table Table::Take(std::span<const int64_t> indices) const {
  std::vector<ColumnPtr> cols;
  cols.reserve(columns_.size());
  for (const auto &c : columns_) cols.push_back(std::make_shared<const Column>(c->Take(indices)));
  Table out(schema_, std::move(cols));
  // A zero-column table still has a row count.
  out.num_rows_ = static_cast<int64_t>(indices.size());
  return out;
}

Table Table::WithSchema(Schema schema) const {
  Table out(std::move(schema), columns_);
  out.num_rows_ = num_rows_;
  return out;
}

std::string Table::ToString(int64_t max_rows) const {
  std::ostringstream os;
  os << schema_.ToString() << " rows=" << num_rows_ << '\n';
  const int64_t shown = std::min(max_rows, num_rows_);
  for (int64_t r = 0; r < shown; ++r) {
    for (int c = 0; c < num_columns(); ++c) {
      if (c) os << ", ";
      os << ValueToString(value(c, r));
    }
    os << '\n';
  }
  if (shown < num_rows_) os << "...\n";
  return os.str();
}

namespace {

bool CellEquals(const Column &a, const Column &b, int64_t i) {
  const bool va = a.is_valid(i);
  if (va != b.is_valid(i)) return false;
  if (!va) return true;
  switch (a.dtype()) {
    case DataType::kInt64: return a.int64_values()[i] == b.int64_values()[i];
    case DataType::kFloat64: {
      const double x = a.float64_values()[i];
      const double y = b.float64_values()[i];
      if (std::isnan(x) || std::isnan(y)) return std::isnan(x) && std::isnan(y);
      return std::bit_cast<uint64_t>(x) == std::bit_cast<uint64_t>(y);
    }
    case DataType::kUtf8: return a.utf8_values().at(i) == b.utf8_values().at(i);
    case DataType::kBool: return a.bool_values()[i] == b.bool_values()[i];
  }
  return false;
}

}  // namespace

bool ValueEquals(const Table &a, const Table &b) {
  if (a.schema() != b.schema() || a.num_rows() != b.num_rows()) return false;
  for (int c = 0; c < a.num_columns(); ++c) {
    const auto &ca = a.column(c);
    const auto &cb = b.column(c);
    for (int64_t i = 0; i < a.num_rows(); ++i) {
      if (!CellEquals(ca, cb, i)) return false;
    }
  }
  return true;
}

}  // namespace shard
