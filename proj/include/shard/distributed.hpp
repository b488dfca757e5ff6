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

#ifndef SHARD_DISTRIBUTED_HPP
#define SHARD_DISTRIBUTED_HPP

#include <span>

#include "shard/relational.hpp"
#include "shard/table.hpp"
#include "shard/transport.hpp"

namespace shard {

// Collective counterparts of the local operators. Each worker passes its own
// slice of the global relations and gets back its slice of the result; nothing
// is gathered. With a single worker these are exactly the local operators.

/// Shuffles left by left_keys and right by right_keys, then joins locally.
Table DistributedJoin(Context &ctx, const Table &left, const Table &right, const JoinConfig &config);

/// Set operations shuffle both sides on every column, then apply the local operator.
Table DistributedUnion(Context &ctx, const Table &a, const Table &b);
Table DistributedIntersect(Context &ctx, const Table &a, const Table &b);
Table DistributedDifference(Context &ctx, const Table &a, const Table &b);

/// Row-local; no communication.
Table DistributedSelect(Context &ctx, const Table &table, const Predicate &predicate);
Table DistributedProject(Context &ctx, const Table &table, std::span<const int> columns);

}  // namespace shard

#endif  // SHARD_DISTRIBUTED_HPP
