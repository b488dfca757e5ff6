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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits nonzero
// if any fails.
//
//   acceptance                  run everything
//   acceptance --only scaling   run one criterion
//   acceptance --skip scaling   run all but one

#include <chrono>
#include <cstring>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "shard/bench.hpp"
#include "shard/csv.hpp"
#include "shard/distributed.hpp"
#include "shard/error.hpp"
#include "shard/partition.hpp"
#include "shard/row_encoding.hpp"
#include "shard/wire.hpp"
#include "test_support.hpp"

namespace {

using namespace shard;
using testing::Rng;
using testing::Row;
using Clock = std::chrono::steady_clock;

// Pinned limits.
constexpr int kJoinPairs = 250;
constexpr int64_t kJoinMaxRows = 64;
constexpr double kJoinBudgetSeconds = 30.0;
constexpr int kEquivalenceInstances = 100;
constexpr int kEquivalenceWorldSizes[] = {1, 2, 4, 8};
constexpr double kEquivalenceBudgetSeconds = 120.0;
constexpr int kShuffleRuns = 3;
constexpr int kRoundTripTables = 250;
constexpr int kTcpMaxWorld = 4;
constexpr int64_t kScalingRows = 1000000;
constexpr int64_t kScalingKeyDomain = 250000;
constexpr int kScalingRepeats = 5;
constexpr double kScalingMaxRatio = 0.7;

struct Outcome {
  bool passed = true;
  std::string detail;
};

class Failure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void Require(bool cond, const std::string &what) {
  if (!cond) throw Failure(what);
}

double Seconds(Clock::time_point since) { return std::chrono::duration<double>(Clock::now() - since).count(); }

constexpr JoinType kJoinTypes[] = {JoinType::kInner, JoinType::kLeft, JoinType::kRight, JoinType::kFullOuter};
constexpr JoinAlgorithm kAlgorithms[] = {JoinAlgorithm::kHash, JoinAlgorithm::kSort};

/// Right schema whose first `keys` columns match the left key types.
Schema MatchingSchema(Rng &rng, const Schema &left, int keys) {
  auto fields = testing::RandomSchema(rng, keys, keys + 2).fields();
  for (int k = 0; k < keys; ++k) fields[static_cast<size_t>(k)].dtype = left.field(k).dtype;
  return Schema(fields);
}

std::vector<int> Iota(int n) {
  std::vector<int> v(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<size_t>(i)] = i;
  return v;
}

// Join oracle ------------------------------------------------------------------

Outcome JoinOracle() {
  Rng rng(1001);
  const auto start = Clock::now();
  int comparisons = 0;
  for (int pair = 0; pair < kJoinPairs; ++pair) {
    const int keys = 1 + static_cast<int>(rng() % 2);
    const Schema ls = testing::RandomSchema(rng, keys, keys + 2);
    const Schema rs = MatchingSchema(rng, ls, keys);
    const testing::GenOptions opts{.max_rows = kJoinMaxRows, .key_domain = 2 + static_cast<int64_t>(rng() % 8)};
    const Table l = testing::RandomTable(rng, ls, opts);
    const Table r = testing::RandomTable(rng, rs, opts);
    for (auto type : kJoinTypes) {
      const JoinConfig base{type, JoinAlgorithm::kHash, Iota(keys), Iota(keys)};
      const Table oracle = CanonicalSort(Table::FromRows(JoinedSchema(ls, rs), testing::NestedLoopJoin(l, r, base)));
      for (auto alg : kAlgorithms) {
        JoinConfig cfg = base;
        cfg.algorithm = alg;
        const Table got = CanonicalSort(Join(l, r, cfg));
        Require(got.schema() == oracle.schema() && got == oracle,
                "pair " + std::to_string(pair) + " " + std::string(JoinTypeName(type)) + "/" +
                    std::string(JoinAlgorithmName(alg)) + " differs from nested-loop join");
        ++comparisons;
      }
    }
  }
  const double secs = Seconds(start);
  Require(secs < kJoinBudgetSeconds, "took " + std::to_string(secs) + " s");
  std::ostringstream os;
  os << kJoinPairs << " pairs, " << comparisons << " comparisons, " << secs << " s";
  return {true, os.str()};
}

// Global equivalence ------------------------------------------------------------

using bench::Op;

struct Instance {
  Op op;
  Table a, b;
  JoinConfig join;
  Predicate predicate;
  std::vector<int> columns;
};

Instance MakeInstance(Rng &rng, Op op) {
  Instance in{op, {}, {}, {}, {}, {}};
  const testing::GenOptions opts{.max_rows = 64, .null_rate = op == Op::kJoin ? 0.0 : 0.1,
                                 .key_domain = 2 + static_cast<int64_t>(rng() % 6), .special_floats = true};
  const Schema sa = testing::RandomSchema(rng, 1, 4);
  switch (op) {
    case Op::kJoin: {
      const Schema sb = MatchingSchema(rng, sa, 1);
      in.a = testing::RandomTable(rng, sa, opts);
      in.b = testing::RandomTable(rng, sb, opts);
      in.join = JoinConfig::Make(kJoinTypes[rng() % 4], kAlgorithms[rng() % 2], 0, 0);
      break;
    }
    case Op::kUnion:
    case Op::kIntersect:
    case Op::kDifference:
      in.a = testing::RandomTable(rng, sa, opts);
      in.b = testing::RandomTable(rng, sa, opts);
      // Overlap the inputs so intersect and difference see shared rows.
      if (in.a.num_rows() > 0 && rng() % 2) in.b = Table::Concat(sa, std::vector<Table>{in.b, in.a.Take(std::vector<int64_t>{0})});
      break;
    case Op::kSelect: {
      in.a = testing::RandomTable(rng, sa, opts);
      const int col = static_cast<int>(rng() % static_cast<uint64_t>(sa.num_fields()));
      auto lit = testing::RandomValue(rng, sa.field(col).dtype, {.key_domain = opts.key_domain});
      in.predicate = MakeComparison(col, static_cast<Comparator>(rng() % 6), lit);
      break;
    }
    case Op::kProject:
      in.a = testing::RandomTable(rng, sa, opts);
      for (int i = 0, n = 1 + static_cast<int>(rng() % 4); i < n; ++i) {
        in.columns.push_back(static_cast<int>(rng() % static_cast<uint64_t>(sa.num_fields())));
      }
      break;
  }
  if (in.b.num_columns() == 0) in.b = Table::Empty(in.a.schema());
  return in;
}

Table Local(const Instance &in) {
  switch (in.op) {
    case Op::kJoin: return Join(in.a, in.b, in.join);
    case Op::kUnion: return Union(in.a, in.b);
    case Op::kIntersect: return Intersect(in.a, in.b);
    case Op::kDifference: return Difference(in.a, in.b);
    case Op::kSelect: return Select(in.a, in.predicate);
    case Op::kProject: return Project(in.a, in.columns);
  }
  return {};
}

Table Distributed(Context &ctx, const Instance &in, const Table &a, const Table &b) {
  switch (in.op) {
    case Op::kJoin: return DistributedJoin(ctx, a, b, in.join);
    case Op::kUnion: return DistributedUnion(ctx, a, b);
    case Op::kIntersect: return DistributedIntersect(ctx, a, b);
    case Op::kDifference: return DistributedDifference(ctx, a, b);
    case Op::kSelect: return DistributedSelect(ctx, a, in.predicate);
    case Op::kProject: return DistributedProject(ctx, a, in.columns);
  }
  return {};
}

Outcome GlobalEquivalence() {
  Rng rng(2002);
  const auto start = Clock::now();
  int runs = 0;
  for (auto op : {Op::kJoin, Op::kUnion, Op::kIntersect, Op::kDifference, Op::kSelect, Op::kProject}) {
    for (int i = 0; i < kEquivalenceInstances; ++i) {
      const Instance in = MakeInstance(rng, op);
      const Table local = Local(in);
      // Set operators keep one representative per canonical row, and which of
      // -0.0 / +0.0 survives depends on arrival order; they are compared on
      // canonical rows. Every other operator must match bit for bit.
      const bool set_op = op == Op::kUnion || op == Op::kIntersect || op == Op::kDifference;
      auto rows_of = [&](const Table &t) { return set_op ? testing::RowMultiset(t) : testing::ExactRowMultiset(t); };
      const auto local_rows = rows_of(local);
      for (int ws : kEquivalenceWorldSizes) {
        const auto a = testing::RandomSplit(rng, in.a, ws);
        const auto b = testing::RandomSplit(rng, in.b, ws);
        auto out = RunInProcess(ws, [&](Context &ctx) {
          const auto r = static_cast<size_t>(ctx.rank());
          return Distributed(ctx, in, a[r], b[r]);
        });
        const std::string where = std::string(bench::OpName(op)) + " instance " + std::to_string(i) + " ws=" +
                                  std::to_string(ws);
        if (ws == 1) {
          // A one-worker split still holds every row in order.
          Require(out[0].schema() == local.schema() && SerializeTable(out[0]) == SerializeTable(local),
                  where + ": not bit-identical to the local operator");
        }
        const Table global = Table::Concat(local.schema(), out);
        Require(global.schema() == local.schema() && rows_of(global) == local_rows,
                where + ": gathered output differs from local operator");
        ++runs;
      }
    }
  }
  const double secs = Seconds(start);
  Require(secs < kEquivalenceBudgetSeconds, "took " + std::to_string(secs) + " s");
  std::ostringstream os;
  os << "6 operators x " << kEquivalenceInstances << " instances x world sizes {1,2,4,8}, " << runs << " runs, "
     << secs << " s";
  return {true, os.str()};
}

// Shuffle invariants ------------------------------------------------------------

uint64_t ReferenceFnv(std::string_view s) {
  uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ull;
  return h;
}

Outcome ShuffleInvariants() {
  Rng rng(3003);
  int trials = 0;
  for (int ws : {2, 3, 4, 8}) {
    for (int t = 0; t < 10; ++t) {
      const int keys = 1 + static_cast<int>(rng() % 2);
      const Schema ls = testing::RandomSchema(rng, keys, keys + 2);
      const Schema rs = MatchingSchema(rng, ls, keys);
      const testing::GenOptions opts{.max_rows = 300, .key_domain = 30, .special_floats = true};
      const Table left = testing::RandomTable(rng, ls, opts);
      const Table right = testing::RandomTable(rng, rs, opts);
      const auto lparts = testing::RandomSplit(rng, left, ws);
      const auto rparts = testing::RandomSplit(rng, right, ws);
      const auto kc = Iota(keys);

      std::vector<std::vector<Bytes>> runs;
      std::vector<std::pair<Table, Table>> first;
      for (int run = 0; run < kShuffleRuns; ++run) {
        auto out = RunInProcess(ws, [&](Context &ctx) {
          const auto r = static_cast<size_t>(ctx.rank());
          return std::pair{Shuffle(ctx, lparts[r], kc), Shuffle(ctx, rparts[r], kc)};
        });
        std::vector<Bytes> bytes;
        for (const auto &[l, r] : out) {
          bytes.push_back(SerializeTable(l));
          bytes.push_back(SerializeTable(r));
        }
        runs.push_back(std::move(bytes));
        if (run == 0) first = std::move(out);
      }
      const std::string where = "ws=" + std::to_string(ws) + " trial " + std::to_string(t);
      for (int run = 1; run < kShuffleRuns; ++run) Require(runs[static_cast<size_t>(run)] == runs[0], where + ": output bytes differ between runs");

      std::vector<Table> all_left, all_right;
      std::map<std::string, std::set<int>> left_home, right_home;
      for (int w = 0; w < ws; ++w) {
        const auto &[l, r] = first[static_cast<size_t>(w)];
        all_left.push_back(l);
        all_right.push_back(r);
        for (auto [tb, home] : {std::pair{&l, &left_home}, std::pair{&r, &right_home}}) {
          const EncodedRows enc(*tb, kc);
          for (int64_t i = 0; i < tb->num_rows(); ++i) {
            Require(ReferenceFnv(enc[i]) % static_cast<uint64_t>(ws) == static_cast<uint64_t>(w),
                    where + ": row placed off its hash partition");
            (*home)[std::string(enc[i])].insert(w);
          }
        }
      }
      Require(testing::RowMultiset(Table::Concat(ls, all_left)) == testing::RowMultiset(left), where + ": left rows not conserved");
      Require(testing::RowMultiset(Table::Concat(rs, all_right)) == testing::RowMultiset(right), where + ": right rows not conserved");
      for (const auto &[key, homes] : left_home) {
        Require(homes.size() == 1, where + ": key on two workers");
        auto it = right_home.find(key);
        if (it != right_home.end()) Require(it->second == homes, where + ": shared key not co-located");
      }
      ++trials;
    }
  }
  return {true, std::to_string(trials) + " trials over world sizes {2,3,4,8}, " + std::to_string(kShuffleRuns) +
                    " runs each"};
}

// Round trips -------------------------------------------------------------------

Outcome RoundTrips() {
  Rng rng(4004);
  int with_nulls = 0, empty_strings = 0, non_ascii = 0;
  const char delimiters[] = {',', '\t', ';'};
  for (int i = 0; i < kRoundTripTables; ++i) {
    // Always carry a Utf8 column so string edge cases are exercised every time.
    auto fields = testing::RandomSchema(rng, 1, 4).fields();
    fields.push_back({"s", DataType::kUtf8});
    const Schema s(fields);
    const int64_t rows = static_cast<int64_t>(rng() % 60);

    const Table wire_table = testing::RandomTable(rng, s, rows, {.null_rate = 0.2, .special_floats = true});
    Require(DeserializeTable(SerializeTable(wire_table), s) == wire_table, "wire table " + std::to_string(i));
    for (const auto &c : wire_table.columns()) with_nulls += c->null_count() > 0;

    const Table csv_table = testing::RandomTable(rng, s, rows + 1, {.special_floats = true});
    const char delim = delimiters[i % 3];
    const auto text = WriteCsvString(csv_table, {.delimiter = delim});
    Require(ReadCsvString(text, {.delimiter = delim, .dtypes = s.dtypes()}) == csv_table,
            "csv table " + std::to_string(i));
    const auto &strings = csv_table.column(s.num_fields() - 1).utf8_values();
    for (int64_t r = 0; r < strings.size(); ++r) {
      const auto v = strings.at(r);
      empty_strings += v.empty();
      non_ascii += std::any_of(v.begin(), v.end(), [](char c) { return static_cast<unsigned char>(c) >= 0x80; });
    }
  }
  Require(with_nulls > 0 && empty_strings > 0 && non_ascii > 0, "edge cases not exercised");
  std::ostringstream os;
  os << kRoundTripTables << " wire + " << kRoundTripTables << " csv tables; " << with_nulls
     << " null-bearing columns, " << empty_strings << " empty and " << non_ascii << " non-ASCII strings";
  return {true, os.str()};
}

// Transport interchangeability ---------------------------------------------------

/// Runs a fixed battery of transport scenarios and returns a transcript of
/// every observable result; both transports must produce the same transcript.
std::string TransportTranscript(testing::TransportKind kind, int ws) {
  using namespace std::chrono_literals;
  std::ostringstream log;
  auto ring = testing::RunClusterCollect(kind, ws, [](Context &ctx) {
    const int n = ctx.world_size();
    ctx.Send((ctx.rank() + 1) % n, 1, Bytes{static_cast<uint8_t>(ctx.rank())});
    return static_cast<int>(ctx.Receive((ctx.rank() + n - 1) % n, 1).at(0));
  });
  log << "ring";
  for (int v : ring) log << ' ' << v;

  auto fifo = testing::RunClusterCollect(kind, ws, [](Context &ctx) {
    const int n = ctx.world_size();
    for (int i = 0; i < 50; ++i) ctx.Send((ctx.rank() + 1) % n, 2, Bytes(static_cast<size_t>(i), static_cast<uint8_t>(i)));
    std::string seen;
    for (int i = 0; i < 50; ++i) {
      const auto b = ctx.Receive((ctx.rank() + n - 1) % n, 2);
      seen += b.size() == static_cast<size_t>(i) && std::all_of(b.begin(), b.end(), [&](uint8_t x) { return x == i; }) ? '.' : '!';
    }
    return seen;
  });
  log << "\nfifo";
  for (const auto &s : fifo) log << ' ' << s;

  auto a2a = testing::RunClusterCollect(kind, ws, [](Context &ctx) {
    Rng rng(static_cast<uint64_t>(ctx.rank()));
    uint64_t sent = 0;
    for (int d = 0; d < ctx.world_size(); ++d) {
      Bytes b(rng() % 20000);
      for (auto &x : b) x = static_cast<uint8_t>(rng());
      sent += b.size();
      ctx.Send(d, 3, std::move(b));
    }
    uint64_t received = 0;
    for (int s = 0; s < ctx.world_size(); ++s) received += ctx.Receive(s, 3).size();
    ctx.Barrier();
    return std::pair{sent, received};
  });
  uint64_t total_sent = 0, total_received = 0;
  for (auto [s, r] : a2a) {
    total_sent += s;
    total_received += r;
  }
  log << "\nalltoall " << total_sent << ' ' << total_received;

  Rng rng(77);
  const Schema s({{"k", DataType::kInt64}, {"v", DataType::kUtf8}});
  const auto parts = testing::RandomSplit(rng, testing::RandomTable(rng, s, 200, {.key_domain = 16}), ws);
  auto shuffled = testing::RunClusterCollect(kind, ws, [&](Context &ctx) {
    const Table mine = parts[static_cast<size_t>(ctx.rank())];
    const Table joined = DistributedJoin(ctx, mine, mine, JoinConfig::Make(JoinType::kInner, JoinAlgorithm::kHash, 0, 0));
    const Table gathered = Gather(ctx, Shuffle(ctx, mine, std::vector<int>{0}));
    return std::tuple{SerializeTable(Shuffle(ctx, mine, std::vector<int>{0})), joined.num_rows(), gathered.num_rows()};
  });
  log << "\nshuffle";
  for (const auto &[bytes, joined, gathered] : shuffled) {
    log << ' ' << ReferenceFnv({reinterpret_cast<const char *>(bytes.data()), bytes.size()}) << '/' << joined << '/'
        << gathered;
  }

  auto codes = testing::RunClusterCollect(kind, ws, [](Context &ctx) {
    std::string out;
    auto code = [&](auto fn) {
      try {
        fn();
        return std::string("ok");
      } catch (const Error &e) {
        return std::string(ErrorCodeName(e.code()));
      }
    };
    out += code([&] { ctx.Send(ctx.world_size(), 0, {}); }) + ",";
    out += code([&] { ctx.Receive(ctx.rank(), 4); }) + ",";  // nothing was sent: times out
    ctx.Barrier();
    ctx.Finalize();
    ctx.Finalize();
    out += code([&] { ctx.Send(0, 0, {}); });
    return out;
  }, 300ms);
  log << "\nerrors";
  for (const auto &c : codes) log << ' ' << c;

  std::string panic = "none";
  try {
    testing::RunCluster(kind, ws, [](Context &ctx) {
      if (ctx.rank() == ctx.world_size() - 1) throw std::runtime_error("injected");
      if (ctx.world_size() > 1) ctx.Receive(ctx.world_size() - 1, 5);
    }, 5s);
  } catch (const Error &e) {
    panic = std::string(ErrorCodeName(e.code())) + (std::string(e.what()).find("injected") != std::string::npos ? "+msg" : "");
  }
  log << "\npanic " << panic;
  return log.str();
}

Outcome TransportInterchangeability() {
  std::ostringstream os;
  for (int ws = 1; ws <= kTcpMaxWorld; ++ws) {
    const auto in_process = TransportTranscript(testing::TransportKind::kInProcess, ws);
    const auto tcp = TransportTranscript(testing::TransportKind::kTcp, ws);
    Require(in_process == tcp, "ws=" + std::to_string(ws) + " transcripts differ:\n--- inprocess\n" + in_process +
                                   "\n--- tcp\n" + tcp);
    Require(in_process.find('!') == std::string::npos, "ws=" + std::to_string(ws) + " FIFO violated");
    Require(in_process.find("panic WorkerPanicError+msg") != std::string::npos ||
                in_process.find("panic WorkerPanic") != std::string::npos,
            "ws=" + std::to_string(ws) + " worker failure not reported");
  }
  os << "identical transcripts for world sizes 1.." << kTcpMaxWorld
     << " (ring, FIFO, all-to-all, shuffle, join, gather, errors, worker failure)";
  return {true, os.str()};
}

// Scaling -------------------------------------------------------------------------

Outcome Scaling() {
  bench::BenchSpec spec{.rows_per_relation = kScalingRows, .op = Op::kJoin, .join_type = JoinType::kInner,
                        .algorithm = JoinAlgorithm::kHash, .key_domain = kScalingKeyDomain, .seed = 7,
                        .repeats = kScalingRepeats};
  spec.world_size = 1;
  const auto one = bench::RunBenchInProcess(spec);
  spec.world_size = 4;
  const auto four = bench::RunBenchInProcess(spec);
  const double ratio = four.MedianSeconds() / one.MedianSeconds();
  const unsigned cores = std::thread::hardware_concurrency();
  std::ostringstream os;
  os << "median ws=1 " << one.MedianSeconds() << " s, ws=4 " << four.MedianSeconds() << " s, ratio " << ratio
     << " (limit " << kScalingMaxRatio << "), output rows " << one.TotalOutputRows() << "/" << four.TotalOutputRows()
     << ", hardware threads " << cores;
  Require(one.TotalOutputRows() == four.TotalOutputRows(), os.str() + "; output counts differ");
  if (ratio > kScalingMaxRatio) {
    if (cores < 4) os << "; criterion assumes at least 4 cores";
    return {false, os.str()};
  }
  return {true, os.str()};
}

struct Criterion {
  const char *name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char **argv) {
  std::string only, skip;
  for (int i = 1; i + 1 < argc; i += 2) {
    if (std::strcmp(argv[i], "--only") == 0) only = argv[i + 1];
    if (std::strcmp(argv[i], "--skip") == 0) skip = argv[i + 1];
  }
  const std::vector<Criterion> criteria = {
      {"join_oracle", JoinOracle},
      {"global_equivalence", GlobalEquivalence},
      {"shuffle_invariants", ShuffleInvariants},
      {"wire_csv_round_trips", RoundTrips},
      {"transport_interchangeability", TransportInterchangeability},
      {"scaling_smoke", Scaling},
  };
  bool all_passed = true;
  for (const auto &c : criteria) {
    const std::string name = c.name;
    if (!only.empty() && name.find(only) == std::string::npos) continue;
    if (!skip.empty() && name.find(skip) != std::string::npos) continue;
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception &e) {
      out = {false, e.what()};
    }
    all_passed &= out.passed;
    std::cout << (out.passed ? "PASS " : "FAIL ") << name << ": " << out.detail << std::endl;
  }
  return all_passed ? 0 : 1;
}
