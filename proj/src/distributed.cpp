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

#include "shard/distributed.hpp"

#include "shard/error.hpp"
#include "shard/partition.hpp"
#include "shard/row_encoding.hpp"

namespace shard {

Table DistributedJoin(Context &ctx, const Table &left, const Table &right, const JoinConfig &config) {
  // Validate before communicating so a bad config fails on every worker alike.
  ValidateJoinConfig(left, right, config);
  const Table l = Shuffle(ctx, left, config.left_keys);
  const Table r = Shuffle(ctx, right, config.right_keys);
  return Join(l, r, config);
}

namespace {

template <typename LocalOp>
Table ShuffledSetOp(Context &ctx, const Table &a, const Table &b, LocalOp op) {
  if (!a.schema().type_compatible(b.schema())) {
    throw Error(ErrorCode::kSchemaMismatch, "set operation needs identical column types: " +
                                                a.schema().ToString() + " vs " + b.schema().ToString());
  }
  const auto cols = AllColumns(a);
  const Table sa = Shuffle(ctx, a, cols, NullKeys::kAllow);
  const Table sb = Shuffle(ctx, b, cols, NullKeys::kAllow);
  return op(sa, sb);
}

}  // namespace

Table DistributedUnion(Context &ctx, const Table &a, const Table &b) {
  return ShuffledSetOp(ctx, a, b, Union);
}

Table DistributedIntersect(Context &ctx, const Table &a, const Table &b) {
  return ShuffledSetOp(ctx, a, b, Intersect);
}

Table DistributedDifference(Context &ctx, const Table &a, const Table &b) {
  return ShuffledSetOp(ctx, a, b, Difference);
}

Table DistributedSelect(Context &, const Table &table, const Predicate &predicate) {
  return Select(table, predicate);
}

Table DistributedProject(Context &, const Table &table, std::span<const int> columns) {
  return Project(table, columns);
}

}  // namespace shard
