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

#ifndef SHARD_BENCH_HPP
#define SHARD_BENCH_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shard/relational.hpp"
#include "shard/table.hpp"
#include "shard/transport.hpp"

namespace shard::bench {

enum class Op { kJoin, kUnion, kIntersect, kDifference, kSelect, kProject };
/// paper4: id,d1,d2,d3 (Int64 + 3 Float64). paper2: id,d1.
enum class Layout { kPaper4, kPaper2 };
enum class TransportKind { kInProcess, kTcp };

std::string_view OpName(Op op);
std::optional<Op> ParseOp(std::string_view name);
std::string_view LayoutName(Layout layout);
std::optional<Layout> ParseLayout(std::string_view name);
std::string_view TransportName(TransportKind kind);
std::optional<TransportKind> ParseTransport(std::string_view name);

/// Default key domain: rows / 4 so joins see duplicate keys; at least 1.
int64_t DefaultKeyDomain(int64_t rows);

/**
 * Deterministic synthetic relation: keys uniform over [0, key_domain),
 * doubles uniform over [0, 1). Driven by mt19937_64, whose output sequence is
 * fixed by the standard, so the data is identical on every platform.
 */
Table GenerateRelation(int64_t rows, Layout layout, uint64_t seed, int64_t key_domain);

/// Contiguous split; the first rows % parts slices get one extra row.
std::vector<Table> SplitEvenly(const Table &table, int parts);

/// "<prefix>_<rank>.csv"
std::filesystem::path PartitionPath(const std::string &prefix, int rank);

struct GenSpec {
  int64_t rows = 0;
  Layout layout = Layout::kPaper4;
  uint64_t seed = 0;
  int64_t key_domain = 0;  // 0 selects DefaultKeyDomain(rows)
  std::string prefix;
  int parts = 1;
};

/// Writes parts CSV files; returns their paths in rank order.
std::vector<std::filesystem::path> Generate(const GenSpec &spec);

struct BenchSpec {
  int64_t rows_per_relation = 0;
  int world_size = 1;
  Op op = Op::kJoin;
  JoinType join_type = JoinType::kInner;
  JoinAlgorithm algorithm = JoinAlgorithm::kHash;
  int64_t key_domain = 0;
  uint64_t seed = 0;
  int repeats = 1;
  TransportKind transport = TransportKind::kInProcess;
  Layout layout = Layout::kPaper4;

  /// Left input files; empty means generate in memory from the fields above.
  std::string prefix;
  /// Right input files; empty means `prefix`.
  std::string right_prefix;

  int left_key = 0;
  int right_key = 0;
  /// select as "column,comparator,literal", e.g. "1,<,0.5".
  std::string predicate = "1,<,0.5";
  std::vector<int> project_columns{0, 1};

  /// verify only: drop each worker's last output row before comparing.
  bool inject_fault = false;

  /// Throws ConfigError for out-of-range fields.
  void Validate() const;
};

/// Builds a comparison predicate from "column,comparator,literal", typing the
/// literal by the column's dtype. Throws ConfigError.
Predicate ParsePredicate(const std::string &text, const Schema &schema);

JoinConfig MakeJoinConfig(const BenchSpec &spec);

/// This rank's inputs: read from files when spec.prefix is set, else generated
/// (left from seed, right from seed + 1) and sliced by rank.
struct RankInputs {
  Table left;
  Table right;
};
RankInputs LoadRankInputs(const BenchSpec &spec, int rank, int world_size);

/// The configured operator, distributed over ctx.
Table RunDistributedOp(Context &ctx, const BenchSpec &spec, const Table &left, const Table &right);
/// The configured operator on one worker.
Table RunLocalOp(const BenchSpec &spec, const Table &left, const Table &right);

struct BenchReport {
  BenchSpec spec;
  /// seconds[repeat][worker], barrier-to-local-completion.
  std::vector<std::vector<double>> seconds;
  /// Output rows per worker (identical in every repeat).
  std::vector<int64_t> output_rows;

  std::vector<double> MaxPerRepeat() const;
  /// Median of per-repeat maxima; repeat 0 is warm-up and excluded when repeats > 1.
  double MedianSeconds() const;
  int64_t TotalOutputRows() const;

  /// Header plus one row per (repeat, worker), one "max" row per repeat and a
  /// final "median" row.
  std::string ToCsv() const;
};

/// One rank of a benchmark; complete report on rank 0 only.
BenchReport RunBenchRank(Context &ctx, const BenchSpec &spec, const RankInputs &inputs);

/// All ranks as threads over the in-process transport.
BenchReport RunBenchInProcess(const BenchSpec &spec);

struct VerifyResult {
  bool passed = false;
  std::vector<int64_t> worker_rows;
  int64_t global_rows = 0;
  int64_t oracle_rows = 0;
  /// First differing row index after canonical sort.
  std::optional<int64_t> first_mismatch;

  std::string Summary() const;
};

/**
 * One rank of a verification run: inputs and distributed output are gathered
 * to rank 0 and compared, canonically sorted, against the local operator on
 * the concatenated inputs. Meaningful on rank 0 only.
 */
VerifyResult RunVerifyRank(Context &ctx, const BenchSpec &spec, const RankInputs &inputs);

VerifyResult RunVerifyInProcess(const BenchSpec &spec);

}  // namespace shard::bench

#endif  // SHARD_BENCH_HPP
