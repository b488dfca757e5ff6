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

#include "shard/relational.hpp"

#include <algorithm>
#include <numeric>

#include "key_index.hpp"
#include "shard/error.hpp"
#include "shard/row_encoding.hpp"

namespace shard {

std::string_view JoinTypeName(JoinType type) {
  switch (type) {
    case JoinType::kInner: return "inner";
    case JoinType::kLeft: return "left";
    case JoinType::kRight: return "right";
    case JoinType::kFullOuter: return "full_outer";
  }
  return "unknown";
}

std::string_view JoinAlgorithmName(JoinAlgorithm algorithm) {
  return algorithm == JoinAlgorithm::kHash ? "hash" : "sort";
}

std::optional<JoinType> ParseJoinType(std::string_view name) {
  if (name == "inner") return JoinType::kInner;
  if (name == "left") return JoinType::kLeft;
  if (name == "right") return JoinType::kRight;
  if (name == "full_outer" || name == "outer" || name == "full" || name == "fullouter") {
    return JoinType::kFullOuter;
  }
  return std::nullopt;
}

std::optional<JoinAlgorithm> ParseJoinAlgorithm(std::string_view name) {
  if (name == "hash") return JoinAlgorithm::kHash;
  if (name == "sort") return JoinAlgorithm::kSort;
  return std::nullopt;
}

void ValidateJoinConfig(const Table &left, const Table &right, const JoinConfig &config) {
  if (config.left_keys.empty() || config.left_keys.size() != config.right_keys.size()) {
    throw Error(ErrorCode::kConfig, "join needs equal, non-empty key lists (left " +
                                        std::to_string(config.left_keys.size()) + ", right " +
                                        std::to_string(config.right_keys.size()) + ")");
  }
  CheckColumnIndices(left, config.left_keys);
  CheckColumnIndices(right, config.right_keys);
  for (size_t k = 0; k < config.left_keys.size(); ++k) {
    const auto &lf = left.schema().field(config.left_keys[k]);
    const auto &rf = right.schema().field(config.right_keys[k]);
    if (lf.dtype != rf.dtype) {
      throw Error(ErrorCode::kConfig, "join key " + lf.name + ":" + std::string(DataTypeName(lf.dtype)) +
                                          " does not match " + rf.name + ":" +
                                          std::string(DataTypeName(rf.dtype)));
    }
  }
}

Schema JoinedSchema(const Schema &left, const Schema &right) {
  std::vector<Field> fields = left.fields();
  std::vector<std::string> used = left.names();
  for (const auto &f : right.fields()) {
    auto name = DisambiguateName(f.name, used);
    used.push_back(name);
    fields.push_back({std::move(name), f.dtype});
  }
  return Schema(std::move(fields));
}

std::optional<Comparator> ParseComparator(std::string_view token) {
  if (token == "==" || token == "=") return Comparator::kEq;
  if (token == "!=") return Comparator::kNe;
  if (token == "<") return Comparator::kLt;
  if (token == "<=") return Comparator::kLe;
  if (token == ">") return Comparator::kGt;
  if (token == ">=") return Comparator::kGe;
  return std::nullopt;
}

namespace {

template <typename T>
bool Compare(const T &a, const T &b, Comparator cmp) {
  switch (cmp) {
    case Comparator::kEq: return a == b;
    case Comparator::kNe: return a != b;
    case Comparator::kLt: return a < b;
    case Comparator::kLe: return a <= b;
    case Comparator::kGt: return a > b;
    case Comparator::kGe: return a >= b;
  }
  return false;
}

}  // namespace

Predicate MakeComparison(int column, Comparator cmp, Value literal) {
  return [column, cmp, literal = std::move(literal)](const Table &t, int64_t row) -> bool {
    if (column < 0 || column >= t.num_columns()) {
      throw Error(ErrorCode::kPredicate, "predicate column " + std::to_string(column) + " out of range");
    }
    const auto &col = t.column(column);
    if (col.is_null(row) || std::holds_alternative<std::monostate>(literal)) return false;
    switch (col.dtype()) {
      case DataType::kInt64: {
        const int64_t v = col.int64_values()[row];
        if (auto *i = std::get_if<int64_t>(&literal)) return Compare(v, *i, cmp);
        if (auto *d = std::get_if<double>(&literal)) return Compare(static_cast<double>(v), *d, cmp);
        break;
      }
      case DataType::kFloat64: {
        const double v = col.float64_values()[row];
        if (auto *d = std::get_if<double>(&literal)) return Compare(v, *d, cmp);
        if (auto *i = std::get_if<int64_t>(&literal)) return Compare(v, static_cast<double>(*i), cmp);
        break;
      }
      case DataType::kUtf8:
        if (auto *s = std::get_if<std::string>(&literal)) {
          return Compare(col.utf8_values().at(row), std::string_view(*s), cmp);
        }
        break;
      case DataType::kBool:
        if (auto *b = std::get_if<bool>(&literal)) return Compare(col.bool_values()[row] != 0, *b, cmp);
        break;
    }
    throw Error(ErrorCode::kPredicate, "literal " + ValueToString(literal) +
                                           " is not comparable with " +
                                           std::string(DataTypeName(col.dtype())) + " column " +
                                           t.schema().field(column).name);
  };
}

Table Select(const Table &table, const Predicate &predicate) {
  std::vector<int64_t> keep;
  for (int64_t r = 0; r < table.num_rows(); ++r) {
    bool hit;
    try {
      hit = predicate(table, r);
    } catch (const Error &e) {
      if (e.code() == ErrorCode::kPredicate) throw;
      throw Error(ErrorCode::kPredicate, "row " + std::to_string(r) + ": " + e.what());
    } catch (const std::exception &e) {
      throw Error(ErrorCode::kPredicate, "row " + std::to_string(r) + ": " + e.what());
    }
    if (hit) keep.push_back(r);
  }
  if (static_cast<int64_t>(keep.size()) == table.num_rows()) return table;
  return table.Take(keep);
}

Table Project(const Table &table, std::span<const int> columns) {
  if (columns.empty()) throw Error(ErrorCode::kIndex, "projection needs at least one column");
  CheckColumnIndices(table, columns);
  std::vector<Field> fields;
  std::vector<std::string> used;
  std::vector<Table::ColumnPtr> cols;
  for (int c : columns) {
    const auto &f = table.schema().field(c);
    auto name = DisambiguateName(f.name, used);
    used.push_back(name);
    fields.push_back({std::move(name), f.dtype});
    cols.push_back(table.column_ptr(c));
  }
  return Table(Schema(std::move(fields)), std::move(cols));
}

namespace {

bool EmitsUnmatchedLeft(JoinType t) { return t == JoinType::kLeft || t == JoinType::kFullOuter; }
bool EmitsUnmatchedRight(JoinType t) { return t == JoinType::kRight || t == JoinType::kFullOuter; }

struct JoinIndices {
  std::vector<int64_t> left;
  std::vector<int64_t> right;

  void Emit(int64_t l, int64_t r) {
    left.push_back(l);
    right.push_back(r);
  }
};

// Both build orientations produce the same ordering: left rows in order, each
// followed by its right matches in right order, then unmatched right rows.
JoinIndices HashJoin(const EncodedRows &lkeys, const EncodedRows &rkeys, JoinType type) {
  JoinIndices out;
  const int64_t nl = lkeys.size();
  const int64_t nr = rkeys.size();
  std::vector<uint8_t> right_matched(static_cast<size_t>(nr), 0);

  if (nr <= nl) {
    detail::KeyIndex index(rkeys, nr);
    // Per group: rows chained in insertion order.
    std::vector<int64_t> head, tail, next(static_cast<size_t>(nr), -1);
    for (int64_t r = 0; r < nr; ++r) {
      const auto g = static_cast<size_t>(index.Insert(r));
      if (g == head.size()) {
        head.push_back(r);
        tail.push_back(r);
      } else {
        next[static_cast<size_t>(tail[g])] = r;
        tail[g] = r;
      }
    }
    out.left.reserve(static_cast<size_t>(nl));
    out.right.reserve(static_cast<size_t>(nl));
    for (int64_t l = 0; l < nl; ++l) {
      const int64_t g = index.Find(lkeys[l]);
      if (g < 0) {
        if (EmitsUnmatchedLeft(type)) out.Emit(l, -1);
        continue;
      }
      for (int64_t r = head[static_cast<size_t>(g)]; r >= 0; r = next[static_cast<size_t>(r)]) {
        out.Emit(l, r);
        right_matched[static_cast<size_t>(r)] = 1;
      }
    }
  } else {
    detail::KeyIndex index(lkeys, nl);
    std::vector<int64_t> left_group(static_cast<size_t>(nl));
    for (int64_t l = 0; l < nl; ++l) left_group[static_cast<size_t>(l)] = index.Insert(l);
    const auto groups = static_cast<size_t>(index.num_groups());
    std::vector<int64_t> head(groups, -1), tail(groups, -1), next(static_cast<size_t>(nr), -1);
    for (int64_t r = 0; r < nr; ++r) {
      const int64_t g = index.Find(rkeys[r]);
      if (g < 0) continue;
      const auto gi = static_cast<size_t>(g);
      if (head[gi] < 0) {
        head[gi] = r;
      } else {
        next[static_cast<size_t>(tail[gi])] = r;
      }
      tail[gi] = r;
      right_matched[static_cast<size_t>(r)] = 1;
    }
    for (int64_t l = 0; l < nl; ++l) {
      const int64_t first = head[static_cast<size_t>(left_group[static_cast<size_t>(l)])];
      if (first < 0) {
        if (EmitsUnmatchedLeft(type)) out.Emit(l, -1);
        continue;
      }
      for (int64_t r = first; r >= 0; r = next[static_cast<size_t>(r)]) out.Emit(l, r);
    }
  }

  if (EmitsUnmatchedRight(type)) {
    for (int64_t r = 0; r < nr; ++r) {
      if (!right_matched[static_cast<size_t>(r)]) out.Emit(-1, r);
    }
  }
  return out;
}

std::vector<int64_t> SortedOrder(const EncodedRows &keys) {
  std::vector<int64_t> order(static_cast<size_t>(keys.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int64_t a, int64_t b) { return keys[a] < keys[b]; });
  return order;
}

JoinIndices SortJoin(const EncodedRows &lkeys, const EncodedRows &rkeys, JoinType type) {
  JoinIndices out;
  const auto lorder = SortedOrder(lkeys);
  const auto rorder = SortedOrder(rkeys);
  size_t i = 0, j = 0;
  while (i < lorder.size() && j < rorder.size()) {
    const auto lk = lkeys[lorder[i]];
    const auto rk = rkeys[rorder[j]];
    const int c = lk.compare(rk);
    if (c < 0) {
      if (EmitsUnmatchedLeft(type)) out.Emit(lorder[i], -1);
      ++i;
    } else if (c > 0) {
      if (EmitsUnmatchedRight(type)) out.Emit(-1, rorder[j]);
      ++j;
    } else {
      size_t ie = i + 1, je = j + 1;
      while (ie < lorder.size() && lkeys[lorder[ie]] == lk) ++ie;
      while (je < rorder.size() && rkeys[rorder[je]] == rk) ++je;
      for (size_t a = i; a < ie; ++a) {
        for (size_t b = j; b < je; ++b) out.Emit(lorder[a], rorder[b]);
      }
      i = ie;
      j = je;
    }
  }
  if (EmitsUnmatchedLeft(type)) {
    for (; i < lorder.size(); ++i) out.Emit(lorder[i], -1);
  }
  if (EmitsUnmatchedRight(type)) {
    for (; j < rorder.size(); ++j) out.Emit(-1, rorder[j]);
  }
  return out;
}

void CheckSetCompatible(const Table &a, const Table &b) {
  if (!a.schema().type_compatible(b.schema())) {
    throw Error(ErrorCode::kSchemaMismatch,
                "set operation needs identical column types: " + a.schema().ToString() + " vs " +
                    b.schema().ToString());
  }
}

Table TakeFromBoth(const Table &a, std::span<const int64_t> ia, const Table &b,
                   std::span<const int64_t> ib) {
  if (ib.empty()) return a.Take(ia);
  const Table parts[] = {a.Take(ia), b.Take(ib).WithSchema(a.schema())};
  return Table::Concat(a.schema(), parts);
}

}  // namespace

Table Join(const Table &left, const Table &right, const JoinConfig &config) {
  ValidateJoinConfig(left, right, config);
  CheckNoNulls(left, config.left_keys, "left");
  CheckNoNulls(right, config.right_keys, "right");
  const EncodedRows lkeys(left, config.left_keys);
  const EncodedRows rkeys(right, config.right_keys);
  const auto idx = config.algorithm == JoinAlgorithm::kHash
                       ? HashJoin(lkeys, rkeys, config.join_type)
                       : SortJoin(lkeys, rkeys, config.join_type);
  const Table lpart = left.Take(idx.left);
  const Table rpart = right.Take(idx.right);
  std::vector<Table::ColumnPtr> cols = lpart.columns();
  cols.insert(cols.end(), rpart.columns().begin(), rpart.columns().end());
  return Table(JoinedSchema(left.schema(), right.schema()), std::move(cols));
}

Table Union(const Table &a, const Table &b) {
  CheckSetCompatible(a, b);
  const auto cols = AllColumns(a);
  const EncodedRows ea(a, cols), eb(b, cols);
  // b rows already present in a are skipped.
  detail::KeyIndex ia_index(ea, a.num_rows());
  std::vector<int64_t> ia, ib;
  for (int64_t r = 0; r < a.num_rows(); ++r) {
    if (ia_index.Insert(r) == static_cast<int64_t>(ia.size())) ia.push_back(r);
  }
  detail::KeyIndex ib_index(eb, b.num_rows());
  for (int64_t r = 0; r < b.num_rows(); ++r) {
    if (ia_index.Find(eb[r]) >= 0) continue;
    if (ib_index.Insert(r) == static_cast<int64_t>(ib.size())) ib.push_back(r);
  }
  return TakeFromBoth(a, ia, b, ib);
}

namespace {

Table FilterDistinct(const Table &a, const Table &b, bool keep_present) {
  CheckSetCompatible(a, b);
  const auto cols = AllColumns(a);
  const EncodedRows ea(a, cols), eb(b, cols);
  detail::KeyIndex bset(eb, b.num_rows());
  for (int64_t r = 0; r < b.num_rows(); ++r) bset.Insert(r);
  detail::KeyIndex seen(ea, a.num_rows());
  std::vector<int64_t> keep;
  for (int64_t r = 0; r < a.num_rows(); ++r) {
    const int64_t before = seen.num_groups();
    if (seen.Insert(r) != before) continue;  // duplicate within a
    if ((bset.Find(ea[r]) >= 0) == keep_present) keep.push_back(r);
  }
  return a.Take(keep);
}

}  // namespace

Table Intersect(const Table &a, const Table &b) { return FilterDistinct(a, b, true); }

Table Difference(const Table &a, const Table &b) { return FilterDistinct(a, b, false); }

}  // namespace shard
