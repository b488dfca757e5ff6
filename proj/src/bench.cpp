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

#include "shard/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <random>
#include <sstream>

#include "shard/csv.hpp"
#include "shard/distributed.hpp"
#include "shard/error.hpp"
#include "shard/in_process.hpp"
#include "shard/partition.hpp"
#include "shard/row_encoding.hpp"

namespace shard::bench {

std::string_view OpName(Op op) {
  switch (op) {
    case Op::kJoin: return "join";
    case Op::kUnion: return "union";
    case Op::kIntersect: return "intersect";
    case Op::kDifference: return "difference";
    case Op::kSelect: return "select";
    case Op::kProject: return "project";
  }
  return "unknown";
}

std::optional<Op> ParseOp(std::string_view name) {
  for (auto op : {Op::kJoin, Op::kUnion, Op::kIntersect, Op::kDifference, Op::kSelect, Op::kProject}) {
    if (OpName(op) == name) return op;
  }
  return std::nullopt;
}

std::string_view LayoutName(Layout layout) { return layout == Layout::kPaper4 ? "paper4" : "paper2"; }

std::optional<Layout> ParseLayout(std::string_view name) {
  if (name == "paper4") return Layout::kPaper4;
  if (name == "paper2") return Layout::kPaper2;
  return std::nullopt;
}

std::string_view TransportName(TransportKind kind) {
  return kind == TransportKind::kInProcess ? "inprocess" : "tcp";
}

std::optional<TransportKind> ParseTransport(std::string_view name) {
  if (name == "inprocess") return TransportKind::kInProcess;
  if (name == "tcp") return TransportKind::kTcp;
  return std::nullopt;
}

int64_t DefaultKeyDomain(int64_t rows) { return std::max<int64_t>(1, rows / 4); }

Table GenerateRelation(int64_t rows, Layout layout, uint64_t seed, int64_t key_domain) {
  if (rows < 0) throw Error(ErrorCode::kConfig, "row count must be non-negative");
  if (key_domain < 1) throw Error(ErrorCode::kConfig, "key domain must be at least 1");
  const int doubles = layout == Layout::kPaper4 ? 3 : 1;
  std::mt19937_64 rng(seed);
  std::vector<int64_t> ids(static_cast<size_t>(rows));
  std::vector<std::vector<double>> payload(static_cast<size_t>(doubles),
                                           std::vector<double>(static_cast<size_t>(rows)));
  const auto domain = static_cast<uint64_t>(key_domain);
  for (int64_t r = 0; r < rows; ++r) {
    ids[static_cast<size_t>(r)] = static_cast<int64_t>(rng() % domain);
    for (auto &col : payload) col[static_cast<size_t>(r)] = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  }
  std::vector<Field> fields{{"id", DataType::kInt64}};
  std::vector<Column> cols;
  cols.push_back(Column::Int64(std::move(ids)));
  for (int d = 0; d < doubles; ++d) {
    fields.push_back({"d" + std::to_string(d + 1), DataType::kFloat64});
    cols.push_back(Column::Float64(std::move(payload[static_cast<size_t>(d)])));
  }
  return Table(Schema(std::move(fields)), std::move(cols));
}

std::vector<Table> SplitEvenly(const Table &table, int parts) {
  if (parts < 1) throw Error(ErrorCode::kConfig, "parts must be at least 1");
  std::vector<Table> out;
  const int64_t n = table.num_rows();
  const int64_t base = n / parts;
  const int64_t extra = n % parts;
  int64_t start = 0;
  for (int p = 0; p < parts; ++p) {
    const int64_t len = base + (p < extra ? 1 : 0);
    std::vector<int64_t> idx(static_cast<size_t>(len));
    for (int64_t i = 0; i < len; ++i) idx[static_cast<size_t>(i)] = start + i;
    out.push_back(table.Take(idx));
    start += len;
  }
  return out;
}

std::filesystem::path PartitionPath(const std::string &prefix, int rank) {
  return prefix + "_" + std::to_string(rank) + ".csv";
}

std::vector<std::filesystem::path> Generate(const GenSpec &spec) {
  if (spec.parts < 1) throw Error(ErrorCode::kConfig, "parts must be at least 1");
  if (spec.prefix.empty()) throw Error(ErrorCode::kConfig, "output prefix is required");
  const int64_t domain = spec.key_domain > 0 ? spec.key_domain : DefaultKeyDomain(spec.rows);
  const auto global = GenerateRelation(spec.rows, spec.layout, spec.seed, domain);
  const auto parts = SplitEvenly(global, spec.parts);
  std::vector<std::filesystem::path> paths;
  for (int p = 0; p < spec.parts; ++p) {
    auto path = PartitionPath(spec.prefix, p);
    WriteCsv(parts[static_cast<size_t>(p)], path);
    paths.push_back(std::move(path));
  }
  return paths;
}

void BenchSpec::Validate() const {
  auto fail = [](const std::string &what) { throw Error(ErrorCode::kConfig, what); };
  if (world_size < 1) fail("world size must be at least 1");
  if (repeats < 1) fail("repeats must be at least 1");
  if (key_domain < 0) fail("key domain must be positive");
  if (rows_per_relation < 0) fail("rows must be non-negative");
  if (prefix.empty() && rows_per_relation == 0) fail("either input files or a row count is required");
  if (op == Op::kProject && project_columns.empty()) fail("project needs at least one column");
}

Predicate ParsePredicate(const std::string &text, const Schema &schema) {
  const auto first = text.find(',');
  const auto second = first == std::string::npos ? first : text.find(',', first + 1);
  if (second == std::string::npos) {
    throw Error(ErrorCode::kConfig, "predicate '" + text + "' is not column,comparator,literal");
  }
  const std::string col_text = text.substr(0, first);
  const std::string cmp_text = text.substr(first + 1, second - first - 1);
  const std::string lit_text = text.substr(second + 1);

  int column = -1;
  if (auto idx = schema.index_of(col_text)) {
    column = *idx;
  } else {
    auto res = std::from_chars(col_text.data(), col_text.data() + col_text.size(), column);
    if (res.ec != std::errc() || res.ptr != col_text.data() + col_text.size()) column = -1;
  }
  if (column < 0 || column >= schema.num_fields()) {
    throw Error(ErrorCode::kConfig, "predicate column '" + col_text + "' not found");
  }
  const auto cmp = ParseComparator(cmp_text);
  if (!cmp) throw Error(ErrorCode::kConfig, "unknown comparator '" + cmp_text + "'");

  Value literal;
  const char *b = lit_text.data();
  const char *e = b + lit_text.size();
  bool ok = true;
  switch (schema.field(column).dtype) {
    case DataType::kInt64: {
      int64_t v = 0;
      auto res = std::from_chars(b, e, v);
      ok = res.ec == std::errc() && res.ptr == e;
      literal = v;
      break;
    }
    case DataType::kFloat64: {
      double v = 0;
      auto res = std::from_chars(b, e, v);
      ok = res.ec == std::errc() && res.ptr == e;
      literal = v;
      break;
    }
    case DataType::kBool:
      ok = lit_text == "true" || lit_text == "false";
      literal = lit_text == "true";
      break;
    case DataType::kUtf8: literal = lit_text; break;
  }
  if (!ok) {
    throw Error(ErrorCode::kConfig, "literal '" + lit_text + "' does not fit column " +
                                        schema.field(column).name);
  }
  return MakeComparison(column, *cmp, std::move(literal));
}

JoinConfig MakeJoinConfig(const BenchSpec &spec) {
  return JoinConfig::Make(spec.join_type, spec.algorithm, spec.left_key, spec.right_key);
}

RankInputs LoadRankInputs(const BenchSpec &spec, int rank, int world_size) {
  RankInputs in;
  if (!spec.prefix.empty()) {
    in.left = ReadCsv(PartitionPath(spec.prefix, rank));
    const auto &rp = spec.right_prefix.empty() ? spec.prefix : spec.right_prefix;
    in.right = rp == spec.prefix ? in.left : ReadCsv(PartitionPath(rp, rank));
    return in;
  }
  const int64_t domain =
      spec.key_domain > 0 ? spec.key_domain : DefaultKeyDomain(spec.rows_per_relation);
  in.left = SplitEvenly(GenerateRelation(spec.rows_per_relation, spec.layout, spec.seed, domain),
                        world_size)[static_cast<size_t>(rank)];
  in.right = SplitEvenly(GenerateRelation(spec.rows_per_relation, spec.layout, spec.seed + 1, domain),
                         world_size)[static_cast<size_t>(rank)];
  return in;
}

Table RunDistributedOp(Context &ctx, const BenchSpec &spec, const Table &left, const Table &right) {
  switch (spec.op) {
    case Op::kJoin: return DistributedJoin(ctx, left, right, MakeJoinConfig(spec));
    case Op::kUnion: return DistributedUnion(ctx, left, right);
    case Op::kIntersect: return DistributedIntersect(ctx, left, right);
    case Op::kDifference: return DistributedDifference(ctx, left, right);
    case Op::kSelect: return DistributedSelect(ctx, left, ParsePredicate(spec.predicate, left.schema()));
    case Op::kProject: return DistributedProject(ctx, left, spec.project_columns);
  }
  throw Error(ErrorCode::kConfig, "unknown operator");
}

Table RunLocalOp(const BenchSpec &spec, const Table &left, const Table &right) {
  switch (spec.op) {
    case Op::kJoin: return Join(left, right, MakeJoinConfig(spec));
    case Op::kUnion: return Union(left, right);
    case Op::kIntersect: return Intersect(left, right);
    case Op::kDifference: return Difference(left, right);
    case Op::kSelect: return Select(left, ParsePredicate(spec.predicate, left.schema()));
    case Op::kProject: return Project(left, spec.project_columns);
  }
  throw Error(ErrorCode::kConfig, "unknown operator");
}

std::vector<double> BenchReport::MaxPerRepeat() const {
  std::vector<double> out;
  out.reserve(seconds.size());
  for (const auto &per_worker : seconds) {
    out.push_back(per_worker.empty() ? 0.0 : *std::max_element(per_worker.begin(), per_worker.end()));
  }
  return out;
}

double BenchReport::MedianSeconds() const {
  auto maxima = MaxPerRepeat();
  if (maxima.empty()) return 0.0;
  if (maxima.size() > 1) maxima.erase(maxima.begin());
  std::sort(maxima.begin(), maxima.end());
  const size_t n = maxima.size();
  return n % 2 ? maxima[n / 2] : 0.5 * (maxima[n / 2 - 1] + maxima[n / 2]);
}

int64_t BenchReport::TotalOutputRows() const {
  int64_t total = 0;
  for (auto r : output_rows) total += r;
  return total;
}

std::string BenchReport::ToCsv() const {
  std::ostringstream os;
  os.precision(9);
  std::ostringstream prefix;
  prefix << spec.rows_per_relation << ',' << spec.world_size << ',' << OpName(spec.op) << ','
         << JoinTypeName(spec.join_type) << ',' << JoinAlgorithmName(spec.algorithm) << ','
         << (spec.key_domain > 0 ? spec.key_domain : DefaultKeyDomain(spec.rows_per_relation)) << ','
         << spec.seed << ',' << spec.repeats << ',' << TransportName(spec.transport);
  os << "rows_per_relation,world_size,op,join_type,algorithm,key_domain,seed,repeats,transport,"
        "repeat,worker,seconds,output_rows,warmup\n";
  const auto maxima = MaxPerRepeat();
  for (size_t rep = 0; rep < seconds.size(); ++rep) {
    const int warmup = rep == 0 && seconds.size() > 1 ? 1 : 0;
    for (size_t w = 0; w < seconds[rep].size(); ++w) {
      os << prefix.str() << ',' << rep << ',' << w << ',' << seconds[rep][w] << ','
         << (w < output_rows.size() ? output_rows[w] : 0) << ',' << warmup << '\n';
    }
    os << prefix.str() << ',' << rep << ",max," << maxima[rep] << ',' << TotalOutputRows() << ','
       << warmup << '\n';
  }
  os << prefix.str() << ",median,max," << MedianSeconds() << ',' << TotalOutputRows() << ",0\n";
  return os.str();
}

namespace {

Schema StatsSchema() {
  return Schema({{"repeat", DataType::kInt64},
                 {"worker", DataType::kInt64},
                 {"seconds", DataType::kFloat64},
                 {"output_rows", DataType::kInt64},
                 {"input_rows", DataType::kInt64}});
}

}  // namespace

BenchReport RunBenchRank(Context &ctx, const BenchSpec &spec, const RankInputs &inputs) {
  spec.Validate();
  std::vector<double> times;
  int64_t out_rows = 0;
  for (int rep = 0; rep < spec.repeats; ++rep) {
    ctx.Barrier();
    const auto start = std::chrono::steady_clock::now();
    const Table result = RunDistributedOp(ctx, spec, inputs.left, inputs.right);
    const auto stop = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double>(stop - start).count());
    out_rows = result.num_rows();
  }

  std::vector<std::vector<Value>> rows;
  for (int rep = 0; rep < spec.repeats; ++rep) {
    rows.push_back({int64_t{rep}, int64_t{ctx.rank()}, times[static_cast<size_t>(rep)], out_rows,
                    inputs.left.num_rows()});
  }
  const Table stats = Gather(ctx, Table::FromRows(StatsSchema(), rows));

  BenchReport report;
  report.spec = spec;
  report.spec.world_size = ctx.world_size();
  report.spec.transport =
      ctx.transport_name() == "tcp" ? TransportKind::kTcp : TransportKind::kInProcess;
  if (ctx.rank() != 0) return report;

  report.seconds.assign(static_cast<size_t>(spec.repeats),
                        std::vector<double>(static_cast<size_t>(ctx.world_size()), 0.0));
  report.output_rows.assign(static_cast<size_t>(ctx.world_size()), 0);
  int64_t input_rows = 0;
  for (int64_t r = 0; r < stats.num_rows(); ++r) {
    const auto rep = static_cast<size_t>(stats.column(0).int64_values()[r]);
    const auto w = static_cast<size_t>(stats.column(1).int64_values()[r]);
    report.seconds[rep][w] = stats.column(2).float64_values()[r];
    report.output_rows[w] = stats.column(3).int64_values()[r];
    if (rep == 0) input_rows += stats.column(4).int64_values()[r];
  }
  if (report.spec.rows_per_relation == 0) report.spec.rows_per_relation = input_rows;
  return report;
}

BenchReport RunBenchInProcess(const BenchSpec &spec) {
  spec.Validate();
  std::vector<RankInputs> inputs;
  for (int r = 0; r < spec.world_size; ++r) inputs.push_back(LoadRankInputs(spec, r, spec.world_size));
  auto reports = RunInProcess(spec.world_size, [&](Context &ctx) {
    return RunBenchRank(ctx, spec, inputs[static_cast<size_t>(ctx.rank())]);
  });
  return reports.front();
}

std::string VerifyResult::Summary() const {
  std::ostringstream os;
  for (size_t w = 0; w < worker_rows.size(); ++w) {
    os << "worker " << w << ": " << worker_rows[w] << " rows\n";
  }
  os << "global rows: " << global_rows << "\n";
  os << "oracle rows: " << oracle_rows << "\n";
  if (passed) {
    os << "PASS\n";
  } else {
    os << "FAIL: first differing row after canonical sort: "
       << (first_mismatch ? std::to_string(*first_mismatch) : std::string("n/a")) << "\n";
  }
  return os.str();
}

namespace {

std::optional<int64_t> FirstDifference(const Table &a, const Table &b) {
  if (!a.schema().type_compatible(b.schema())) return 0;
  const auto cols = AllColumns(a);
  const EncodedRows ea(a, cols), eb(b, cols);
  const int64_t n = std::min(a.num_rows(), b.num_rows());
  for (int64_t i = 0; i < n; ++i) {
    if (ea[i] != eb[i]) return i;
  }
  if (a.num_rows() != b.num_rows()) return n;
  return std::nullopt;
}

}  // namespace

VerifyResult RunVerifyRank(Context &ctx, const BenchSpec &spec, const RankInputs &inputs) {
  spec.Validate();
  const Table all_left = Gather(ctx, inputs.left);
  const Table all_right = Gather(ctx, inputs.right);

  Table result = RunDistributedOp(ctx, spec, inputs.left, inputs.right);
  if (spec.inject_fault && result.num_rows() > 0) {
    std::vector<int64_t> keep(static_cast<size_t>(result.num_rows() - 1));
    for (size_t i = 0; i < keep.size(); ++i) keep[i] = static_cast<int64_t>(i);
    result = result.Take(keep);
  }
  const Table counts = Gather(
      ctx, Table::FromRows(Schema({{"rows", DataType::kInt64}}), {{Value{result.num_rows()}}}));
  const Table gathered = Gather(ctx, result);

  VerifyResult out;
  if (ctx.rank() != 0) return out;
  for (int64_t r = 0; r < counts.num_rows(); ++r) out.worker_rows.push_back(counts.column(0).int64_values()[r]);
  out.global_rows = gathered.num_rows();
  const Table oracle = RunLocalOp(spec, all_left, all_right);
  out.oracle_rows = oracle.num_rows();
  out.first_mismatch = FirstDifference(CanonicalSort(gathered), CanonicalSort(oracle));
  out.passed = !out.first_mismatch.has_value() && gathered.schema() == oracle.schema();
  return out;
}

VerifyResult RunVerifyInProcess(const BenchSpec &spec) {
  spec.Validate();
  std::vector<RankInputs> inputs;
  for (int r = 0; r < spec.world_size; ++r) inputs.push_back(LoadRankInputs(spec, r, spec.world_size));
  auto results = RunInProcess(spec.world_size, [&](Context &ctx) {
    return RunVerifyRank(ctx, spec, inputs[static_cast<size_t>(ctx.rank())]);
  });
  return results.front();
}

}  // namespace shard::bench
