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

#ifndef SHARD_SCHEMA_HPP
#define SHARD_SCHEMA_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace shard {

/// Column element type. The numeric value doubles as the wire dtype code.
enum class DataType : uint8_t {
  kInt64 = 0,
  kFloat64 = 1,
  kUtf8 = 2,
  kBool = 3,
};

std::string_view DataTypeName(DataType type);
std::optional<DataType> DataTypeFromName(std::string_view name);
std::optional<DataType> DataTypeFromCode(uint8_t code);

struct Field {
  std::string name;
  DataType dtype;

  bool operator==(const Field &) const = default;
};

/**
 * Ordered list of fields. Names are unique and may not contain the CSV
 * separators or line breaks; both are checked on construction.
 */
class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<Field> fields);

  int num_fields() const { return static_cast<int>(fields_.size()); }
  const Field &field(int i) const { return fields_.at(static_cast<size_t>(i)); }
  const std::vector<Field> &fields() const { return fields_; }

  std::vector<DataType> dtypes() const;
  std::vector<std::string> names() const;

  /// Index of the named field, or nullopt.
  std::optional<int> index_of(std::string_view name) const;

  /// Same column count and pairwise identical dtypes; names are ignored.
  bool type_compatible(const Schema &other) const;

  std::string ToString() const;

  bool operator==(const Schema &) const = default;

 private:
  std::vector<Field> fields_;
};

/// Returns `name` if unused, else the first of name_1, name_2, ... not in `used`.
std::string DisambiguateName(const std::string &name, const std::vector<std::string> &used);

}  // namespace shard

#endif  // SHARD_SCHEMA_HPP
