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

// Random data generators, reference implementations and cluster runners shared
// by the unit and acceptance tests. The references here work on Value tuples
// and never touch row encodings, so they check the engine independently.

#ifndef SHARD_TESTS_TEST_SUPPORT_HPP
#define SHARD_TESTS_TEST_SUPPORT_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "shard/in_process.hpp"
#include "shard/relational.hpp"
#include "shard/table.hpp"
#include "shard/transport.hpp"

namespace shard::testing {

using Rng = std::mt19937_64;
using Row = std::vector<Value>;

struct GenOptions {
  int64_t max_rows = 64;
  double null_rate = 0.0;
  /// Int64 values drawn from [0, key_domain); small domains force duplicates.
  int64_t key_domain = 8;
  /// Include NaN and signed zeros among doubles.
  bool special_floats = false;
};

Value RandomValue(Rng &rng, DataType type, const GenOptions &opts);
Schema RandomSchema(Rng &rng, int min_cols, int max_cols);
Table RandomTable(Rng &rng, const Schema &schema, int64_t rows, const GenOptions &opts);
Table RandomTable(Rng &rng, const Schema &schema, const GenOptions &opts);

/// Splits rows across `parts` tables at random (order within each part kept).
std::vector<Table> RandomSplit(Rng &rng, const Table &table, int parts);

/// Textual identity of a value: equal iff the engine should treat them as equal
/// (integers exact, doubles by canonical bit pattern, null distinct from all).
std::string CellKey(const Value &v);
std::string RowKey(const Row &row);
std::string RowKey(const Table &t, int64_t row, const std::vector<int> &cols);

/// Sorted row keys; equal iff the tables hold the same row multiset.
std::vector<std::string> RowMultiset(const Table &t);
/// Like RowMultiset but doubles keep their exact bit patterns, so -0.0 and
/// +0.0 (or two NaN payloads) count as different rows.
std::vector<std::string> ExactRowMultiset(const Table &t);

/// Nested-loop join over Value tuples, returned as rows.
std::vector<Row> NestedLoopJoin(const Table &left, const Table &right, const JoinConfig &cfg);

/// First-occurrence distinct rows using std::map on row keys.
std::vector<Row> SetUnion(const Table &a, const Table &b);
std::vector<Row> SetIntersect(const Table &a, const Table &b);
std::vector<Row> SetDifference(const Table &a, const Table &b);

/// Exact row-by-row comparison, order included.
bool SameRows(const Table &t, const std::vector<Row> &rows);
std::vector<std::string> RowMultiset(const std::vector<Row> &rows);

enum class TransportKind { kInProcess, kTcp };
std::string KindName(TransportKind kind);

using WorkerBody = std::function<void(Context &)>;

/// Runs `body` on world_size workers of the chosen transport. TCP workers are
/// threads of this process connected over loopback sockets. Throws the first
/// worker failure as WorkerPanicError.
void RunCluster(TransportKind kind, int world_size, const WorkerBody &body,
                std::chrono::milliseconds idle_timeout = kDefaultIdleTimeout);

/// Per-rank results of `body`.
template <typename Fn>
auto RunClusterCollect(TransportKind kind, int world_size, Fn &&body,
                       std::chrono::milliseconds idle_timeout = kDefaultIdleTimeout) {
  using Result = std::invoke_result_t<Fn &, Context &>;
  std::vector<std::optional<Result>> slots(static_cast<size_t>(world_size));
  RunCluster(
      kind, world_size, [&](Context &ctx) { slots[static_cast<size_t>(ctx.rank())].emplace(body(ctx)); },
      idle_timeout);
  std::vector<Result> out;
  for (auto &s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace shard::testing

#endif  // SHARD_TESTS_TEST_SUPPORT_HPP
