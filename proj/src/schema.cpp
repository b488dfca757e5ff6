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

#include "shard/schema.hpp"

#include <algorithm>
#include <unordered_set>

#include "shard/error.hpp"

namespace shard {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kIndex: return "IndexError";
    case ErrorCode::kPredicate: return "PredicateError";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kKeyNull: return "KeyNullError";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatchError";
    case ErrorCode::kWireFormat: return "WireFormatError";
    case ErrorCode::kTransport: return "TransportError";
    case ErrorCode::kDeadlockTimeout: return "DeadlockTimeout";
    case ErrorCode::kConnect: return "ConnectError";
    case ErrorCode::kWorkerPanic: return "WorkerPanicError";
    case ErrorCode::kUnsupportedDtype: return "UnsupportedDtypeError";
    case ErrorCode::kFinalized: return "FinalizedError";
  }
  return "Error";
}

std::string_view DataTypeName(DataType type) {
  switch (type) {
    case DataType::kInt64: return "int64";
    case DataType::kFloat64: return "float64";
    case DataType::kUtf8: return "utf8";
    case DataType::kBool: return "bool";
  }
  return "unknown";
}

std::optional<DataType> DataTypeFromName(std::string_view name) {
  for (auto t : {DataType::kInt64, DataType::kFloat64, DataType::kUtf8, DataType::kBool}) {
    if (DataTypeName(t) == name) return t;
  }
  return std::nullopt;
}

std::optional<DataType> DataTypeFromCode(uint8_t code) {
  if (code > static_cast<uint8_t>(DataType::kBool)) return std::nullopt;
  return static_cast<DataType>(code);
}

Schema::Schema(std::vector<Field> fields) : fields_(std::move(fields)) {
  std::unordered_set<std::string> seen;
  for (const auto &f : fields_) {
    if (f.name.empty()) {
      throw Error(ErrorCode::kConfig, "field names must be non-empty");
    }
    if (f.name.find_first_of(",;\t\r\n\"") != std::string::npos) {
      throw Error(ErrorCode::kConfig, "field name '" + f.name + "' contains a reserved character");
    }
    if (!seen.insert(f.name).second) {
      throw Error(ErrorCode::kConfig, "duplicate field name '" + f.name + "'");
    }
  }
}

std::vector<DataType> Schema::dtypes() const {
  std::vector<DataType> out;
  out.reserve(fields_.size());
  for (const auto &f : fields_) out.push_back(f.dtype);
  return out;
}

std::vector<std::string> Schema::names() const {
  std::vector<std::string> out;
  out.reserve(fields_.size());
  for (const auto &f : fields_) out.push_back(f.name);
  return out;
}

std::optional<int> Schema::index_of(std::string_view name) const {
  for (size_t i = 0; i < fields_.size(); ++i) {
    if (fields_[i].name == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

bool Schema::type_compatible(const Schema &other) const {
  return dtypes() == other.dtypes();
}

std::string Schema::ToString() const {
  std::string out = "[";
  for (size_t i = 0; i < fields_.size(); ++i) {
    if (i) out += ", ";
    out += fields_[i].name;
    out += ':';
    out += DataTypeName(fields_[i].dtype);
  }
  out += ']';
  return out;
}

std::string DisambiguateName(const std::string &name, const std::vector<std::string> &used) {
  auto taken = [&](const std::string &n) {
    return std::find(used.begin(), used.end(), n) != used.end();
  };
  if (!taken(name)) return name;
  for (int suffix = 1;; ++suffix) {
    std::string candidate = name + "_" + std::to_string(suffix);
    if (!taken(candidate)) return candidate;
  }
}

}  // namespace shard
