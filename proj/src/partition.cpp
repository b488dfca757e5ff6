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

#include "shard/partition.hpp"

#include "shard/error.hpp"
#include "shard/row_encoding.hpp"
#include "shard/wire.hpp"

namespace shard {

PartitionSet HashPartition(const Table &table, std::span<const int> key_cols, int num_parts,
                           NullKeys nulls) {
  if (num_parts < 1) {
    throw Error(ErrorCode::kConfig, "partition count must be at least 1, got " + std::to_string(num_parts));
  }
  CheckColumnIndices(table, key_cols);
  if (nulls == NullKeys::kReject) CheckNoNulls(table, key_cols, "partition");

  PartitionSet out;
  out.key_cols.assign(key_cols.begin(), key_cols.end());
  if (num_parts == 1) {
    out.parts.push_back(table);
    return out;
  }
  const EncodedRows keys(table, key_cols);
  std::vector<std::vector<int64_t>> rows(static_cast<size_t>(num_parts));
  for (auto &r : rows) r.reserve(static_cast<size_t>(table.num_rows() / num_parts + 1));
  for (int64_t r = 0; r < table.num_rows(); ++r) {
    rows[static_cast<size_t>(PartitionOf(keys.hash(r), num_parts))].push_back(r);
  }
  out.parts.reserve(rows.size());
  for (const auto &idx : rows) out.parts.push_back(table.Take(idx));
  return out;
}

Table Shuffle(Context &ctx, const Table &table, std::span<const int> key_cols, NullKeys nulls) {
  const int world = ctx.world_size();
  const int rank = ctx.rank();
  if (world == 1) {
    CheckColumnIndices(table, key_cols);
    if (nulls == NullKeys::kReject) CheckNoNulls(table, key_cols, "shuffle");
    return table;
  }
  const Tag tag = ctx.NextSequence();
  auto partitions = HashPartition(table, key_cols, world, nulls);

  std::vector<Table> received(static_cast<size_t>(world));
  received[static_cast<size_t>(rank)] = std::move(partitions.parts[static_cast<size_t>(rank)]);
  for (int step = 1; step < world; ++step) {
    const int dest = (rank + step) % world;
    ctx.Send(dest, tag, SerializeTable(partitions.parts[static_cast<size_t>(dest)]));
    partitions.parts[static_cast<size_t>(dest)] = Table();
  }
  for (int step = 1; step < world; ++step) {
    const int source = (rank - step + world) % world;
    const Bytes wire = ctx.Receive(source, tag);
    try {
      received[static_cast<size_t>(source)] = DeserializeTable(wire, table.schema());
    } catch (const Error &e) {
      if (e.code() != ErrorCode::kWireFormat) throw;
      throw Error(ErrorCode::kSchemaMismatch, "rank " + std::to_string(rank) + " cannot decode partition from rank " +
                                                  std::to_string(source) + ": " + e.what());
    }
  }
  return Table::Concat(table.schema(), received);
}

Table Gather(Context &ctx, const Table &table, int root) {
  const int world = ctx.world_size();
  if (root < 0 || root >= world) {
    throw Error(ErrorCode::kIndex, "gather root " + std::to_string(root) + " out of range");
  }
  if (world == 1) return table;
  const Tag tag = ctx.NextSequence();
  if (ctx.rank() != root) {
    ctx.Send(root, tag, SerializeTable(table));
    return Table::Empty(table.schema());
  }
  std::vector<Table> parts(static_cast<size_t>(world));
  for (int r = 0; r < world; ++r) {
    if (r == root) {
      parts[static_cast<size_t>(r)] = table;
      continue;
    }
    try {
      parts[static_cast<size_t>(r)] = DeserializeTable(ctx.Receive(r, tag), table.schema());
    } catch (const Error &e) {
      if (e.code() != ErrorCode::kWireFormat) throw;
      throw Error(ErrorCode::kSchemaMismatch,
                  "cannot decode table gathered from rank " + std::to_string(r) + ": " + e.what());
    }
  }
  return Table::Concat(table.schema(), parts);
}

}  // namespace shard
