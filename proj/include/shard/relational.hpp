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

#ifndef SHARD_RELATIONAL_HPP
#define SHARD_RELATIONAL_HPP

#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "shard/table.hpp"

namespace shard {

enum class JoinType { kInner, kLeft, kRight, kFullOuter };
enum class JoinAlgorithm { kHash, kSort };

std::string_view JoinTypeName(JoinType type);
std::string_view JoinAlgorithmName(JoinAlgorithm algorithm);
/// Accepts inner, left, right, full_outer (also "outer", "full", "fullouter").
std::optional<JoinType> ParseJoinType(std::string_view name);
/// Accepts hash, sort.
std::optional<JoinAlgorithm> ParseJoinAlgorithm(std::string_view name);

struct JoinConfig {
  JoinType join_type = JoinType::kInner;
  JoinAlgorithm algorithm = JoinAlgorithm::kHash;
  std::vector<int> left_keys;
  std::vector<int> right_keys;

  /// Single-column join, the left_col / right_col form.
  static JoinConfig Make(JoinType type, JoinAlgorithm algorithm, int left_col, int right_col) {
    return JoinConfig{type, algorithm, {left_col}, {right_col}};
  }

  bool operator==(const JoinConfig &) const = default;
};

/// Throws ConfigError on arity/type mismatch, IndexError on bad indices.
void ValidateJoinConfig(const Table &left, const Table &right, const JoinConfig &config);

/// Left fields followed by right fields; colliding right names get _1, _2, ...
Schema JoinedSchema(const Schema &left, const Schema &right);

/// Row-level test. Must be pure; any exception it throws surfaces as PredicateError.
using Predicate = std::function<bool(const Table &, int64_t)>;

enum class Comparator { kEq, kNe, kLt, kLe, kGt, kGe };

/// Accepts ==, =, !=, <, <=, >, >=.
std::optional<Comparator> ParseComparator(std::string_view token);

/**
 * `column <cmp> literal`. Null cells never match. Int64 and Float64 compare
 * numerically with each other; other type pairings fail at evaluation time.
 */
Predicate MakeComparison(int column, Comparator cmp, Value literal);

Table Select(const Table &table, const Predicate &predicate);

/// Duplicate indices are allowed; repeated names are disambiguated.
Table Project(const Table &table, std::span<const int> columns);

/**
 * Equi-join on the configured key columns. Key equality is byte equality of
 * the row encodings. Key columns must be null-free (KeyNullError).
 *
 * Hash output follows left row order (right matches in right order), then
 * unmatched right rows. Sort output follows key encoding order.
 */
Table Join(const Table &left, const Table &right, const JoinConfig &config);

/// Distinct rows of a then b, first occurrence order. Names come from a.
Table Union(const Table &a, const Table &b);
/// Distinct rows of a also present in b, in a's order.
Table Intersect(const Table &a, const Table &b);
/// Distinct rows of a absent from b, in a's order.
Table Difference(const Table &a, const Table &b);

}  // namespace shard

#endif  // SHARD_RELATIONAL_HPP
