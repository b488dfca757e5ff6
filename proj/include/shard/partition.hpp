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

#ifndef SHARD_PARTITION_HPP
#define SHARD_PARTITION_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "shard/table.hpp"
#include "shard/transport.hpp"

namespace shard {

/// Join keys must be null-free; set operations key on whole rows, nulls included.
enum class NullKeys { kReject, kAllow };

struct PartitionSet {
  /// parts[p] holds the rows whose key hash maps to p, in source order.
  std::vector<Table> parts;
  std::vector<int> key_cols;
};

/// Destination of a key hash among `num_parts` partitions.
inline int PartitionOf(uint64_t key_hash, int num_parts) {
  return static_cast<int>(key_hash % static_cast<uint64_t>(num_parts));
}

/**
 * Splits rows by FNV-1a(encoding of key_cols) mod num_parts. Stable.
 * Throws IndexError for bad columns, KeyNullError for null keys under kReject.
 */
PartitionSet HashPartition(const Table &table, std::span<const int> key_cols, int num_parts,
                           NullKeys nulls = NullKeys::kReject);

/**
 * Collective all-to-all exchange: every worker partitions its table by key
 * and keeps the part destined to its own rank, receiving the rest from its
 * peers. The result concatenates parts in order of origin rank.
 *
 * Step s (1 <= s < world size) sends to rank + s and receives from rank - s.
 * Empty parts are still sent, so the receive count is fixed.
 */
Table Shuffle(Context &ctx, const Table &table, std::span<const int> key_cols,
              NullKeys nulls = NullKeys::kReject);

/// Collective: concatenation of all workers' tables (rank order) on `root`; empty elsewhere.
Table Gather(Context &ctx, const Table &table, int root = 0);

}  // namespace shard

#endif  // SHARD_PARTITION_HPP
