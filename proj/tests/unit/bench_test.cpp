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

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "shard/bench.hpp"
#include "shard/csv.hpp"
#include "shard/error.hpp"
#include "shard/in_process.hpp"
#include "test_support.hpp"

namespace shard::bench {
namespace {

namespace fs = std::filesystem;

std::string Slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class TempDir {
 public:
  explicit TempDir(const std::string &name) : path_(fs::temp_directory_path() / name) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string operator/(const std::string &leaf) const { return (path_ / leaf).string(); }

 private:
  fs::path path_;
};

struct CommandResult {
  int exit_code = -1;
  std::string output;
};

CommandResult RunCli(const std::string &args) {
  const std::string cmd = std::string(SHARD_CLI_PATH) + " " + args + " 2>&1";
  CommandResult result;
  FILE *pipe = popen(cmd.c_str(), "r");
  if (!pipe) return result;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) result.output.append(buf, n);
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::vector<std::vector<std::string>> ParseReport(const std::string &csv) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

// Generation ------------------------------------------------------------------

TEST(Gen, EvenSplitWithRemainderToLowRanks) {
  TempDir dir("shard_gen_split");
  const auto paths = Generate({.rows = 8, .seed = 1, .prefix = dir / "t", .parts = 2});
  ASSERT_EQ(paths.size(), 2u);
  EXPECT_EQ(paths[1].filename(), "t_1.csv");
  for (const auto &p : paths) EXPECT_EQ(ReadCsv(p).num_rows(), 4);
  const Table t = GenerateRelation(10, Layout::kPaper2, 1, 3);
  const auto parts = SplitEvenly(t, 3);
  EXPECT_EQ(parts[0].num_rows(), 4);
  EXPECT_EQ(parts[1].num_rows(), 3);
  EXPECT_EQ(parts[2].num_rows(), 3);
}

TEST(Gen, LayoutsAndRanges) {
  const Table four = GenerateRelation(500, Layout::kPaper4, 9, 50);
  EXPECT_EQ(four.schema().names(), (std::vector<std::string>{"id", "d1", "d2", "d3"}));
  EXPECT_EQ(four.schema().dtypes(),
            (std::vector<DataType>{DataType::kInt64, DataType::kFloat64, DataType::kFloat64, DataType::kFloat64}));
  const Table two = GenerateRelation(500, Layout::kPaper2, 9, 50);
  EXPECT_EQ(two.schema().names(), (std::vector<std::string>{"id", "d1"}));
  for (int64_t r = 0; r < four.num_rows(); ++r) {
    const auto k = four.column(0).int64_values()[r];
    ASSERT_TRUE(k >= 0 && k < 50);
    for (int c = 1; c < 4; ++c) {
      const double d = four.column(c).float64_values()[r];
      ASSERT_TRUE(d >= 0.0 && d < 1.0);
    }
  }
  EXPECT_EQ(DefaultKeyDomain(1000), 250);
  EXPECT_EQ(DefaultKeyDomain(2), 1);
}

TEST(Gen, SameSeedByteIdentical) {
  TempDir dir("shard_gen_det");
  Generate({.rows = 300, .seed = 5, .prefix = dir / "a", .parts = 3});
  Generate({.rows = 300, .seed = 5, .prefix = dir / "b", .parts = 3});
  Generate({.rows = 300, .seed = 6, .prefix = dir / "c", .parts = 3});
  for (int r = 0; r < 3; ++r) {
    EXPECT_EQ(Slurp(PartitionPath(dir / "a", r)), Slurp(PartitionPath(dir / "b", r)));
  }
  EXPECT_NE(Slurp(PartitionPath(dir / "a", 0)), Slurp(PartitionPath(dir / "c", 0)));
}

TEST(Gen, RejectsBadParts) {
  EXPECT_THROW(Generate({.rows = 3, .prefix = "/tmp/x", .parts = 0}), Error);
}

// Reports ---------------------------------------------------------------------

TEST(Report, MedianExcludesWarmup) {
  BenchReport r;
  r.seconds = {{9.0, 1.0}, {1.0, 2.0}, {3.0, 1.0}, {2.5, 0.5}};
  EXPECT_EQ(r.MaxPerRepeat(), (std::vector<double>{9.0, 2.0, 3.0, 2.5}));
  EXPECT_DOUBLE_EQ(r.MedianSeconds(), 2.5);
  r.seconds = {{4.0}};
  EXPECT_DOUBLE_EQ(r.MedianSeconds(), 4.0);
}

TEST(Report, MedianNonIncreasingWhenSlowWarmupExcluded) {
  BenchReport r;
  r.seconds = {{10.0}, {1.0}, {2.0}};
  // Median over all three repeats would be 2.0; dropping the warm-up gives 1.5.
  EXPECT_DOUBLE_EQ(r.MedianSeconds(), 1.5);
  EXPECT_LE(r.MedianSeconds(), 2.0);
}

TEST(Bench, SingleWorkerCountMatchesOracle) {
  BenchSpec spec{.rows_per_relation = 10000, .world_size = 1, .repeats = 3};
  const BenchReport report = RunBenchInProcess(spec);
  ASSERT_EQ(report.seconds.size(), 3u);
  const Table l = GenerateRelation(10000, Layout::kPaper4, 0, 2500);
  const Table r = GenerateRelation(10000, Layout::kPaper4, 1, 2500);
  // Inner join cardinality: sum over keys of left count times right count.
  std::map<int64_t, int64_t> left_counts, right_counts;
  for (auto k : l.column(0).int64_values()) ++left_counts[k];
  for (auto k : r.column(0).int64_values()) ++right_counts[k];
  int64_t expect = 0;
  for (const auto &[k, n] : left_counts) expect += n * right_counts[k];
  EXPECT_EQ(report.TotalOutputRows(), expect);

  const auto rows = ParseReport(report.ToCsv());
  ASSERT_EQ(rows[0], (std::vector<std::string>{"rows_per_relation", "world_size", "op", "join_type", "algorithm",
                                               "key_domain", "seed", "repeats", "transport", "repeat", "worker",
                                               "seconds", "output_rows", "warmup"}));
  // 3 per-worker rows, 3 max rows, 1 median row.
  ASSERT_EQ(rows.size(), 8u);
  EXPECT_EQ((std::vector<std::string>(rows[1].begin(), rows[1].begin() + 9)),
            (std::vector<std::string>{"10000", "1", "join", "inner", "hash", "2500", "0", "3", "inprocess"}));
  EXPECT_EQ(rows[1][13], "1");
  EXPECT_EQ(rows[3][13], "0");
  EXPECT_EQ(rows[7][9], "median");
}

TEST(Bench, WorldSizeDoesNotChangeOutputCount) {
  for (auto op : {Op::kJoin, Op::kUnion, Op::kIntersect, Op::kDifference, Op::kSelect, Op::kProject}) {
    BenchSpec spec{.rows_per_relation = 20000, .op = op, .key_domain = 5000, .seed = 3};
    spec.layout = Layout::kPaper2;
    spec.world_size = 1;
    const auto one = RunBenchInProcess(spec).TotalOutputRows();
    spec.world_size = 4;
    const auto four = RunBenchInProcess(spec);
    EXPECT_EQ(one, four.TotalOutputRows()) << OpName(op);
    EXPECT_EQ(four.output_rows.size(), 4u);
  }
}

TEST(Bench, SpecValidation) {
  EXPECT_THROW((BenchSpec{.rows_per_relation = 10, .repeats = 0}.Validate()), Error);
  EXPECT_THROW((BenchSpec{.rows_per_relation = 10, .world_size = 0}.Validate()), Error);
  EXPECT_THROW((BenchSpec{}.Validate()), Error);
}

TEST(Bench, PredicateParsing) {
  const Schema s({{"id", DataType::kInt64}, {"d1", DataType::kFloat64}});
  const Table t = Table::FromRows(s, {{int64_t{1}, 0.25}, {int64_t{5}, 0.75}});
  EXPECT_EQ(Select(t, ParsePredicate("1,<,0.5", s)).num_rows(), 1);
  EXPECT_EQ(Select(t, ParsePredicate("id,>=,5", s)).num_rows(), 1);
  EXPECT_THROW(ParsePredicate("id,~,5", s), Error);
  EXPECT_THROW(ParsePredicate("id,<,abc", s), Error);
  EXPECT_THROW(ParsePredicate("zz,<,1", s), Error);
  EXPECT_THROW(ParsePredicate("id<1", s), Error);
}

// Verification ----------------------------------------------------------------

TEST(Verify, PassesForEveryOperatorAndFailsOnInjectedFault) {
  for (auto op : {Op::kJoin, Op::kUnion, Op::kIntersect, Op::kDifference, Op::kSelect, Op::kProject}) {
    for (int ws : {1, 4}) {
      BenchSpec spec{.rows_per_relation = 3000, .world_size = ws, .op = op, .key_domain = 300, .seed = 8};
      const auto ok = RunVerifyInProcess(spec);
      EXPECT_TRUE(ok.passed) << OpName(op) << " ws=" << ws << "\n" << ok.Summary();
      EXPECT_EQ(ok.global_rows, ok.oracle_rows);
      // Random doubles make generated relations disjoint, so intersect is empty
      // and dropping rows cannot change it.
      if (ok.global_rows == 0) continue;
      spec.inject_fault = true;
      const auto bad = RunVerifyInProcess(spec);
      EXPECT_FALSE(bad.passed) << OpName(op);
      EXPECT_TRUE(bad.first_mismatch.has_value());
    }
  }
}

TEST(Verify, SelfIntersectFromFiles) {
  TempDir dir("shard_verify_self");
  Generate({.rows = 3000, .seed = 4, .prefix = dir / "t", .parts = 4});
  BenchSpec spec{.world_size = 4, .op = Op::kIntersect, .prefix = dir / "t"};
  const auto ok = RunVerifyInProcess(spec);
  EXPECT_TRUE(ok.passed) << ok.Summary();
  EXPECT_EQ(ok.global_rows, 3000);
  spec.inject_fault = true;
  EXPECT_FALSE(RunVerifyInProcess(spec).passed);
}

TEST(Verify, JoinTypesAndAlgorithmsMatchBenchCounts) {
  for (auto type : {JoinType::kInner, JoinType::kLeft, JoinType::kRight, JoinType::kFullOuter}) {
    for (auto alg : {JoinAlgorithm::kHash, JoinAlgorithm::kSort}) {
      BenchSpec spec{.rows_per_relation = 2000, .world_size = 3, .join_type = type, .algorithm = alg,
                     .key_domain = 700, .seed = 2};
      const auto v = RunVerifyInProcess(spec);
      EXPECT_TRUE(v.passed) << v.Summary();
      EXPECT_EQ(RunBenchInProcess(spec).TotalOutputRows(), v.oracle_rows);
    }
  }
}

// Command line ----------------------------------------------------------------

TEST(Cli, GenWritesFiles) {
  TempDir dir("shard_cli_gen");
  const auto res = RunCli("gen --rows 8 --parts 2 --prefix " + (dir / "g"));
  ASSERT_EQ(res.exit_code, 0) << res.output;
  EXPECT_EQ(ReadCsv(dir / "g_0.csv").num_rows(), 4);
  EXPECT_EQ(ReadCsv(dir / "g_1.csv").num_rows(), 4);
  EXPECT_EQ(Slurp(dir / "g_0.csv").substr(0, 12), "id,d1,d2,d3\n");
}

TEST(Cli, BenchFromFilesMatchesInMemoryOracle) {
  TempDir dir("shard_cli_bench");
  ASSERT_EQ(RunCli("gen --rows 4000 --parts 2 --seed 4 --key-domain 1000 --prefix " + (dir / "l")).exit_code, 0);
  ASSERT_EQ(RunCli("gen --rows 4000 --parts 2 --seed 5 --key-domain 1000 --prefix " + (dir / "r")).exit_code, 0);
  const auto res = RunCli("bench --world-size 2 --repeats 2 --prefix " + (dir / "l") + " --right-prefix " +
                          (dir / "r") + " --join-type full_outer --algorithm sort");
  ASSERT_EQ(res.exit_code, 0) << res.output;
  const auto rows = ParseReport(res.output);
  const auto &median = rows.back();
  ASSERT_EQ(median[9], "median");
  const Table l = Table::Concat(ReadCsv(dir / "l_0.csv").schema(),
                                std::vector<Table>{ReadCsv(dir / "l_0.csv"), ReadCsv(dir / "l_1.csv")});
  const Table r = Table::Concat(l.schema(), std::vector<Table>{ReadCsv(dir / "r_0.csv"), ReadCsv(dir / "r_1.csv")});
  const auto expect = Join(l, r, JoinConfig::Make(JoinType::kFullOuter, JoinAlgorithm::kHash, 0, 0)).num_rows();
  EXPECT_EQ(median[12], std::to_string(expect));
  EXPECT_EQ(median[0], "4000");
}

TEST(Cli, VerifyExitCodes) {
  auto ok = RunCli("verify --rows 5000 --world-size 4 --op join --seed 11");
  EXPECT_EQ(ok.exit_code, 0) << ok.output;
  EXPECT_NE(ok.output.find("worker 3:"), std::string::npos);
  EXPECT_NE(ok.output.find("PASS"), std::string::npos);
  auto bad = RunCli("verify --rows 5000 --world-size 4 --op join --seed 11 --inject-fault");
  EXPECT_NE(bad.exit_code, 0);
  EXPECT_NE(bad.output.find("first differing row"), std::string::npos) << bad.output;
}

TEST(Cli, TcpVerifyAndBench) {
  auto v = RunCli("verify --rows 4000 --world-size 3 --op intersect --key-domain 20 --transport tcp");
  EXPECT_EQ(v.exit_code, 0) << v.output;
  EXPECT_NE(v.output.find("worker 2:"), std::string::npos) << v.output;
  auto b = RunCli("bench --rows 4000 --world-size 2 --transport tcp --repeats 2");
  EXPECT_EQ(b.exit_code, 0) << b.output;
  const auto rows = ParseReport(b.output);
  ASSERT_GE(rows.size(), 2u);
  EXPECT_EQ(rows[1][8], "tcp");
  EXPECT_EQ(rows[1][1], "2");
  auto f = RunCli("verify --rows 4000 --world-size 2 --transport tcp --inject-fault");
  EXPECT_NE(f.exit_code, 0) << f.output;
}

TEST(Cli, ErrorsExitNonzero) {
  EXPECT_NE(RunCli("bench --op nosuch --rows 10").exit_code, 0);
  EXPECT_NE(RunCli("bench --prefix /nonexistent/shard/x").exit_code, 0);
  EXPECT_NE(RunCli("bench --rows 10 --repeats 0").exit_code, 0);
  EXPECT_NE(RunCli("worker").exit_code, 0);
  EXPECT_NE(RunCli("").exit_code, 0);
}

}  // namespace
}  // namespace shard::bench
