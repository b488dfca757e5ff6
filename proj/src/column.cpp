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

#include "shard/column.hpp"

#include <bit>
#include <charconv>
#include <cstring>

#include "shard/error.hpp"

namespace shard {

std::string ValueToString(const Value &value) {
  struct Visitor {
    std::string operator()(std::monostate) const { return "null"; }
    std::string operator()(int64_t v) const { return std::to_string(v); }
    std::string operator()(double v) const {
      char buf[64];
      auto res = std::to_chars(buf, buf + sizeof(buf), v);
      return std::string(buf, res.ptr);
    }
    std::string operator()(const std::string &v) const { return v; }
    std::string operator()(bool v) const { return v ? "true" : "false"; }
  };
  return std::visit(Visitor{}, value);
}

namespace {

int64_t StorageLength(const Column::Storage &storage) {
  return std::visit(
      [](const auto &s) -> int64_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, StringBuffer>) {
          return s.size();
        } else {
          return static_cast<int64_t>(s.size());
        }
      },
      storage);
}

void CheckStringBuffer(const StringBuffer &buf) {
  if (buf.offsets.empty() || buf.offsets.front() != 0) {
    throw Error(ErrorCode::kConfig, "utf8 offsets must start at 0");
  }
  for (size_t i = 1; i < buf.offsets.size(); ++i) {
    if (buf.offsets[i] < buf.offsets[i - 1]) {
      throw Error(ErrorCode::kConfig, "utf8 offsets must be non-decreasing");
    }
  }
  if (buf.offsets.back() != static_cast<int64_t>(buf.data.size())) {
    throw Error(ErrorCode::kConfig, "utf8 last offset must equal byte length");
  }
}

}  // namespace

Column::Column(Storage storage, std::optional<std::vector<uint8_t>> validity)
    : storage_(std::move(storage)), length_(StorageLength(storage_)), validity_(std::move(validity)) {
  if (validity_ && validity_->size() != BitmapBytes(length_)) {
    throw Error(ErrorCode::kConfig, "validity bitmap size does not match column length");
  }
  if (std::holds_alternative<StringBuffer>(storage_)) {
    CheckStringBuffer(std::get<StringBuffer>(storage_));
  }
}

Column Column::Int64(std::vector<int64_t> values, std::optional<std::vector<uint8_t>> validity) {
  return Column(Storage(std::in_place_index<0>, std::move(values)), std::move(validity));
}

Column Column::Float64(std::vector<double> values, std::optional<std::vector<uint8_t>> validity) {
  return Column(Storage(std::in_place_index<1>, std::move(values)), std::move(validity));
}

Column Column::Utf8(StringBuffer values, std::optional<std::vector<uint8_t>> validity) {
  return Column(Storage(std::in_place_index<2>, std::move(values)), std::move(validity));
}

Column Column::Utf8(const std::vector<std::string> &values,
                    std::optional<std::vector<uint8_t>> validity) {
  StringBuffer buf;
  buf.offsets.reserve(values.size() + 1);
  for (const auto &v : values) {
    buf.data += v;
    buf.offsets.push_back(static_cast<int64_t>(buf.data.size()));
  }
  return Utf8(std::move(buf), std::move(validity));
}

Column Column::Bool(std::vector<uint8_t> values, std::optional<std::vector<uint8_t>> validity) {
  for (auto &v : values) v = v ? 1 : 0;
  return Column(Storage(std::in_place_index<3>, std::move(values)), std::move(validity));
}

Column Column::Empty(DataType type) {
  switch (type) {
    case DataType::kInt64: return Int64({});
    case DataType::kFloat64: return Float64({});
    case DataType::kUtf8: return Utf8(StringBuffer{});
    case DataType::kBool: return Bool({});
  }
  throw Error(ErrorCode::kUnsupportedDtype, "unknown dtype");
}

int64_t Column::null_count() const {
  if (!validity_) return 0;
  int64_t valid = 0;
  const auto &bits = *validity_;
  const int64_t full = length_ / 8;
  for (int64_t i = 0; i < full; ++i) valid += std::popcount(bits[static_cast<size_t>(i)]);
  for (int64_t i = full * 8; i < length_; ++i) valid += BitIsSet(bits, i);
  return length_ - valid;
}

std::span<const uint8_t> Column::validity_bitmap() const {
  if (!validity_) return {};
  return *validity_;
}

Value Column::value(int64_t i) const {
  if (i < 0 || i >= length_) {
    throw Error(ErrorCode::kIndex, "row " + std::to_string(i) + " out of range");
  }
  if (!is_valid(i)) return std::monostate{};
  switch (dtype()) {
    case DataType::kInt64: return int64_values()[static_cast<size_t>(i)];
    case DataType::kFloat64: return float64_values()[static_cast<size_t>(i)];
    case DataType::kUtf8: return std::string(utf8_values().at(i));
    case DataType::kBool: return bool_values()[static_cast<size_t>(i)] != 0;
  }
  return std::monostate{};
}

namespace {

template <typename T>
std::vector<T> GatherFixed(std::span<const T> src, std::span<const int64_t> indices) {
  std::vector<T> out(indices.size());
  for (size_t k = 0; k < indices.size(); ++k) {
    const int64_t idx = indices[k];
    out[k] = idx < 0 ? T{} : src[static_cast<size_t>(idx)];
  }
  return out;
}

}  // namespace

Column Column::Take(std::span<const int64_t> indices) const {
  const auto n = static_cast<int64_t>(indices.size());
  bool need_bitmap = false;
  for (auto idx : indices) {
    if (idx < -1 || idx >= length_) {
      throw Error(ErrorCode::kIndex, "take index " + std::to_string(idx) + " out of range");
    }
    if (idx < 0 || !is_valid(idx)) need_bitmap = true;
  }
  std::optional<std::vector<uint8_t>> validity;
  if (need_bitmap) {
    validity.emplace(BitmapBytes(n), 0);
    for (int64_t k = 0; k < n; ++k) {
      const int64_t idx = indices[static_cast<size_t>(k)];
      SetBit(*validity, k, idx >= 0 && is_valid(idx));
    }
  }
  switch (dtype()) {
    case DataType::kInt64:
      return Int64(GatherFixed(int64_values(), indices), std::move(validity));
    case DataType::kFloat64:
      return Float64(GatherFixed(float64_values(), indices), std::move(validity));
    case DataType::kBool:
      return Bool(GatherFixed(bool_values(), indices), std::move(validity));
    case DataType::kUtf8: {
      const auto &src = utf8_values();
      StringBuffer buf;
      buf.offsets.resize(indices.size() + 1);
      int64_t total = 0;
      for (size_t k = 0; k < indices.size(); ++k) {
        const int64_t idx = indices[k];
        if (idx >= 0) total += src.offsets[idx + 1] - src.offsets[idx];
        buf.offsets[k + 1] = total;
      }
      buf.data.resize(static_cast<size_t>(total));
      for (size_t k = 0; k < indices.size(); ++k) {
        const int64_t idx = indices[k];
        if (idx < 0) continue;
        const int64_t len = src.offsets[idx + 1] - src.offsets[idx];
        if (len > 0) {
          std::memcpy(buf.data.data() + buf.offsets[k], src.data.data() + src.offsets[idx],
                      static_cast<size_t>(len));
        }
      }
      return Utf8(std::move(buf), std::move(validity));
    }
  }
  throw Error(ErrorCode::kUnsupportedDtype, "unknown dtype");
}

Column Column::Concat(std::span<const Column *const> parts) {
  if (parts.empty()) {
    throw Error(ErrorCode::kConfig, "concat needs at least one column");
  }
  const DataType type = parts.front()->dtype();
  int64_t total = 0;
  bool need_bitmap = false;
  for (const auto *p : parts) {
    if (p->dtype() != type) {
      throw Error(ErrorCode::kSchemaMismatch, "cannot concatenate columns of different dtypes");
    }
    total += p->length();
    need_bitmap = need_bitmap || p->has_validity();
  }
  std::optional<std::vector<uint8_t>> validity;
  if (need_bitmap) {
    validity.emplace(BitmapBytes(total), 0);
    int64_t pos = 0;
    for (const auto *p : parts) {
      for (int64_t i = 0; i < p->length(); ++i) SetBit(*validity, pos++, p->is_valid(i));
    }
  }
  auto concat_fixed = [&](auto getter) {
    using T = typename std::decay_t<decltype(getter(*parts.front()))>::value_type;
    std::vector<std::remove_const_t<T>> out;
    out.reserve(static_cast<size_t>(total));
    for (const auto *p : parts) {
      auto vals = getter(*p);
      out.insert(out.end(), vals.begin(), vals.end());
    }
    return out;
  };
  switch (type) {
    case DataType::kInt64:
      return Int64(concat_fixed([](const Column &c) { return c.int64_values(); }), std::move(validity));
    case DataType::kFloat64:
      return Float64(concat_fixed([](const Column &c) { return c.float64_values(); }),
                     std::move(validity));
    case DataType::kBool:
      return Bool(concat_fixed([](const Column &c) { return c.bool_values(); }), std::move(validity));
    case DataType::kUtf8: {
      StringBuffer buf;
      buf.offsets.reserve(static_cast<size_t>(total) + 1);
      for (const auto *p : parts) {
        const auto &src = p->utf8_values();
        const int64_t base = static_cast<int64_t>(buf.data.size());
        buf.data += src.data;
        for (size_t i = 1; i < src.offsets.size(); ++i) buf.offsets.push_back(base + src.offsets[i]);
      }
      return Utf8(std::move(buf), std::move(validity));
    }
  }
  throw Error(ErrorCode::kUnsupportedDtype, "unknown dtype");
}

ColumnBuilder::ColumnBuilder(DataType type) : type_(type) {
  switch (type) {
    case DataType::kInt64: storage_.emplace<0>(); break;
    case DataType::kFloat64: storage_.emplace<1>(); break;
    case DataType::kUtf8: storage_.emplace<2>(); break;
    case DataType::kBool: storage_.emplace<3>(); break;
  }
}

void ColumnBuilder::Reserve(int64_t n) {
  std::visit(
      [n](auto &s) {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, StringBuffer>) {
          s.offsets.reserve(static_cast<size_t>(n) + 1);
        } else {
          s.reserve(static_cast<size_t>(n));
        }
      },
      storage_);
  validity_.reserve(BitmapBytes(n));
}

void ColumnBuilder::MarkValid(bool valid) {
  if (static_cast<size_t>(length_ >> 3) >= validity_.size()) validity_.push_back(0);
  SetBit(validity_, length_, valid);
  any_null_ = any_null_ || !valid;
  ++length_;
}

void ColumnBuilder::AppendNull() {
  switch (type_) {
    case DataType::kInt64: std::get<0>(storage_).push_back(0); break;
    case DataType::kFloat64: std::get<1>(storage_).push_back(0.0); break;
    case DataType::kUtf8: {
      auto &s = std::get<2>(storage_);
      s.offsets.push_back(static_cast<int64_t>(s.data.size()));
      break;
    }
    case DataType::kBool: std::get<3>(storage_).push_back(0); break;
  }
  MarkValid(false);
}

void ColumnBuilder::AppendInt64(int64_t v) {
  std::get<0>(storage_).push_back(v);
  MarkValid(true);
}

void ColumnBuilder::AppendFloat64(double v) {
  std::get<1>(storage_).push_back(v);
  MarkValid(true);
}

void ColumnBuilder::AppendBool(bool v) {
  std::get<3>(storage_).push_back(v ? 1 : 0);
  MarkValid(true);
}

void ColumnBuilder::AppendString(std::string_view v) {
  auto &s = std::get<2>(storage_);
  s.data.append(v);
  s.offsets.push_back(static_cast<int64_t>(s.data.size()));
  MarkValid(true);
}

void ColumnBuilder::Append(const Value &value) {
  auto mismatch = [&] {
    throw Error(ErrorCode::kSchemaMismatch,
                "value does not match column dtype " + std::string(DataTypeName(type_)));
  };
  if (std::holds_alternative<std::monostate>(value)) {
    AppendNull();
    return;
  }
  switch (type_) {
    case DataType::kInt64:
      if (!std::holds_alternative<int64_t>(value)) mismatch();
      AppendInt64(std::get<int64_t>(value));
      break;
    case DataType::kFloat64:
      if (!std::holds_alternative<double>(value)) mismatch();
      AppendFloat64(std::get<double>(value));
      break;
    case DataType::kUtf8:
      if (!std::holds_alternative<std::string>(value)) mismatch();
      AppendString(std::get<std::string>(value));
      break;
    case DataType::kBool:
      if (!std::holds_alternative<bool>(value)) mismatch();
      AppendBool(std::get<bool>(value));
      break;
  }
}

Column ColumnBuilder::Finish() {
  std::optional<std::vector<uint8_t>> validity;
  if (any_null_) {
    validity_.resize(BitmapBytes(length_));
    validity = std::move(validity_);
  }
  Column out = [&] {
    switch (type_) {
      case DataType::kInt64: return Column::Int64(std::move(std::get<0>(storage_)), std::move(validity));
      case DataType::kFloat64:
        return Column::Float64(std::move(std::get<1>(storage_)), std::move(validity));
      case DataType::kUtf8: return Column::Utf8(std::move(std::get<2>(storage_)), std::move(validity));
      case DataType::kBool: return Column::Bool(std::move(std::get<3>(storage_)), std::move(validity));
    }
    throw Error(ErrorCode::kUnsupportedDtype, "unknown dtype");
  }();
  *this = ColumnBuilder(type_);
  return out;
}

}  // namespace shard
