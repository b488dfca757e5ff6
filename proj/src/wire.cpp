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

#include "shard/wire.hpp"

#include <bit>
#include <cstring>

#include "shard/error.hpp"

namespace shard {

namespace {

class Writer {
 public:
  explicit Writer(size_t reserve) { out_.reserve(reserve); }

  void U8(uint8_t v) { out_.push_back(v); }
  void U32(uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void U64(uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void Raw(const void *data, size_t n) {
    const auto *p = static_cast<const uint8_t *>(data);
    out_.insert(out_.end(), p, p + n);
  }
  template <typename T>
  void Words(std::span<const T> values) {
    static_assert(sizeof(T) == 8);
    if constexpr (std::endian::native == std::endian::little) {
      Raw(values.data(), values.size_bytes());
    } else {
      for (const T &v : values) U64(std::bit_cast<uint64_t>(v));
    }
  }

  Bytes Take() { return std::move(out_); }

 private:
  Bytes out_;
};

class Reader {
 public:
  explicit Reader(std::span<const uint8_t> in) : in_(in) {}

  void Need(uint64_t n, const char *what) const {
    if (in_.size() - pos_ < n) {
      throw Error(ErrorCode::kWireFormat, std::string("truncated buffer reading ") + what + " at byte " +
                                              std::to_string(pos_));
    }
  }
  uint8_t U8(const char *what) {
    Need(1, what);
    return in_[pos_++];
  }
  uint32_t U32(const char *what) {
    Need(4, what);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  uint64_t U64(const char *what) {
    Need(8, what);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  std::span<const uint8_t> Raw(uint64_t n, const char *what) {
    Need(n, what);
    auto out = in_.subspan(pos_, static_cast<size_t>(n));
    pos_ += static_cast<size_t>(n);
    return out;
  }
  template <typename T>
  std::vector<T> Words(uint64_t count, const char *what) {
    if (count > remaining() / 8) Need(remaining() + 1, what);
    auto raw = Raw(count * 8, what);
    std::vector<T> out(static_cast<size_t>(count));
    if constexpr (std::endian::native == std::endian::little) {
      if (!raw.empty()) std::memcpy(out.data(), raw.data(), raw.size());
    } else {
      for (size_t i = 0; i < out.size(); ++i) {
        uint64_t v = 0;
        for (int b = 0; b < 8; ++b) v |= static_cast<uint64_t>(raw[i * 8 + b]) << (8 * b);
        out[i] = std::bit_cast<T>(v);
      }
    }
    return out;
  }
  size_t remaining() const { return in_.size() - pos_; }

 private:
  std::span<const uint8_t> in_;
  size_t pos_ = 0;
};

size_t EstimateSize(const Table &t) {
  size_t n = 12;
  for (const auto &c : t.columns()) {
    n += 2 + BitmapBytes(c->length()) + static_cast<size_t>(c->length()) * 8 + 8;
    if (c->dtype() == DataType::kUtf8) n += c->utf8_values().data.size();
  }
  return n;
}

}  // namespace

Bytes SerializeTable(const Table &table) {
  Writer w(EstimateSize(table));
  const auto rows = static_cast<uint64_t>(table.num_rows());
  w.U32(static_cast<uint32_t>(table.num_columns()));
  w.U64(rows);
  for (const auto &col : table.columns()) {
    w.U8(static_cast<uint8_t>(col->dtype()));
    w.U8(col->has_validity() ? 1 : 0);
    if (col->has_validity()) {
      const auto bits = col->validity_bitmap();
      w.Raw(bits.data(), bits.size());
    }
    switch (col->dtype()) {
      case DataType::kInt64: w.Words(col->int64_values()); break;
      case DataType::kFloat64: w.Words(col->float64_values()); break;
      case DataType::kBool: {
        const auto v = col->bool_values();
        w.Raw(v.data(), v.size());
        break;
      }
      case DataType::kUtf8: {
        const auto &buf = col->utf8_values();
        w.U64(buf.offsets.size());
        w.Words(std::span<const int64_t>(buf.offsets));
        w.Raw(buf.data.data(), buf.data.size());
        break;
      }
    }
  }
  return w.Take();
}

Table DeserializeTable(std::span<const uint8_t> wire, const Schema &schema) {
  Reader r(wire);
  const uint32_t ncols = r.U32("column count");
  const uint64_t rows = r.U64("row count");
  if (static_cast<int>(ncols) != schema.num_fields()) {
    throw Error(ErrorCode::kWireFormat, "wire table has " + std::to_string(ncols) +
                                            " columns, schema expects " +
                                            std::to_string(schema.num_fields()));
  }
  // Each row costs at least one bit per column.
  if (ncols > 0 && rows / 8 > wire.size()) {
    throw Error(ErrorCode::kWireFormat, "truncated buffer: " + std::to_string(rows) + " rows declared");
  }
  std::vector<Column> columns;
  columns.reserve(ncols);
  for (uint32_t c = 0; c < ncols; ++c) {
    const uint8_t code = r.U8("dtype code");
    const auto expected = schema.field(static_cast<int>(c)).dtype;
    if (code != static_cast<uint8_t>(expected)) {
      throw Error(ErrorCode::kWireFormat, "column " + std::to_string(c) + " has dtype code " +
                                              std::to_string(code) + ", schema expects " +
                                              std::string(DataTypeName(expected)));
    }
    const uint8_t flag = r.U8("validity flag");
    if (flag > 1) throw Error(ErrorCode::kWireFormat, "bad validity flag " + std::to_string(flag));
    std::optional<std::vector<uint8_t>> validity;
    if (flag) {
      auto bits = r.Raw(BitmapBytes(static_cast<int64_t>(rows)), "validity bitmap");
      validity.emplace(bits.begin(), bits.end());
    }
    switch (expected) {
      case DataType::kInt64:
        columns.push_back(Column::Int64(r.Words<int64_t>(rows, "int64 values"), std::move(validity)));
        break;
      case DataType::kFloat64:
        columns.push_back(Column::Float64(r.Words<double>(rows, "float64 values"), std::move(validity)));
        break;
      case DataType::kBool: {
        auto raw = r.Raw(rows, "bool values");
        for (uint8_t b : raw) {
          if (b > 1) throw Error(ErrorCode::kWireFormat, "bool byte out of range");
        }
        columns.push_back(Column::Bool(std::vector<uint8_t>(raw.begin(), raw.end()), std::move(validity)));
        break;
      }
      case DataType::kUtf8: {
        const uint64_t count = r.U64("offset count");
        if (count != rows + 1) {
          throw Error(ErrorCode::kWireFormat, "utf8 column " + std::to_string(c) + " has " +
                                                  std::to_string(count) + " offsets for " +
                                                  std::to_string(rows) + " rows");
        }
        StringBuffer buf;
        buf.offsets = r.Words<int64_t>(count, "utf8 offsets");
        if (buf.offsets.front() != 0) throw Error(ErrorCode::kWireFormat, "utf8 offsets must start at 0");
        for (size_t i = 1; i < buf.offsets.size(); ++i) {
          if (buf.offsets[i] < buf.offsets[i - 1]) {
            throw Error(ErrorCode::kWireFormat, "utf8 offsets decrease at " + std::to_string(i));
          }
        }
        auto bytes = r.Raw(static_cast<uint64_t>(buf.offsets.back()), "utf8 bytes");
        buf.data.assign(reinterpret_cast<const char *>(bytes.data()), bytes.size());
        columns.push_back(Column::Utf8(std::move(buf), std::move(validity)));
        break;
      }
    }
  }
  if (r.remaining() != 0) {
    throw Error(ErrorCode::kWireFormat, std::to_string(r.remaining()) + " trailing bytes");
  }
  if (ncols == 0) return Table::Empty(schema);
  return Table(schema, std::move(columns));
}

}  // namespace shard
