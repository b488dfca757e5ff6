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

// shard: data generation, benchmarks and verification runs.
//
//   shard gen --rows 1000000 --prefix /tmp/left --parts 4
//   shard bench --op join --world-size 4 --prefix /tmp/left --right-prefix /tmp/right
//   shard verify --op union --world-size 4 --rows 10000 --transport tcp
//
// With --transport tcp, bench and verify launch one `shard worker` process per
// rank on free loopback ports; rank 0 prints the result.

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <glog/logging.h>

#include "shard/bench.hpp"
#include "shard/error.hpp"
#include "shard/in_process.hpp"
#include "shard/tcp_transport.hpp"

namespace {

using namespace shard;
using namespace shard::bench;

constexpr int kExitMismatch = 1;
constexpr int kExitError = 2;

template <typename T>
std::map<std::string, T> NameMap(std::initializer_list<T> values, std::string_view (*name)(T)) {
  std::map<std::string, T> out;
  for (auto v : values) out.emplace(std::string(name(v)), v);
  return out;
}

void AddSpecOptions(CLI::App *cmd, BenchSpec &spec) {
  cmd->add_option("--rows", spec.rows_per_relation, "Rows per relation when generating in memory");
  cmd->add_option("--world-size", spec.world_size, "Number of workers")->check(CLI::PositiveNumber);
  cmd->add_option("--op", spec.op, "Operator")
      ->transform(CLI::CheckedTransformer(
          NameMap({Op::kJoin, Op::kUnion, Op::kIntersect, Op::kDifference, Op::kSelect, Op::kProject},
                  OpName)));
  cmd->add_option("--join-type", spec.join_type, "inner, left, right or full_outer")
      ->transform(CLI::CheckedTransformer(
          NameMap({JoinType::kInner, JoinType::kLeft, JoinType::kRight, JoinType::kFullOuter}, JoinTypeName)));
  cmd->add_option("--algorithm", spec.algorithm, "hash or sort")
      ->transform(CLI::CheckedTransformer(NameMap({JoinAlgorithm::kHash, JoinAlgorithm::kSort}, JoinAlgorithmName)));
  cmd->add_option("--key-domain", spec.key_domain, "Distinct keys (default rows/4)");
  cmd->add_option("--seed", spec.seed, "Generator seed");
  cmd->add_option("--repeats", spec.repeats, "Timed repeats; the first is warm-up")->check(CLI::PositiveNumber);
  cmd->add_option("--transport", spec.transport, "inprocess or tcp")
      ->transform(CLI::CheckedTransformer(NameMap({TransportKind::kInProcess, TransportKind::kTcp}, TransportName)));
  cmd->add_option("--layout,--cols", spec.layout, "paper4 or paper2")
      ->transform(CLI::CheckedTransformer(NameMap({Layout::kPaper4, Layout::kPaper2}, LayoutName)));
  cmd->add_option("--prefix", spec.prefix, "Left input files <prefix>_<rank>.csv");
  cmd->add_option("--right-prefix", spec.right_prefix, "Right input files (default: --prefix)");
  cmd->add_option("--left-key", spec.left_key, "Left join key column");
  cmd->add_option("--right-key", spec.right_key, "Right join key column");
  cmd->add_option("--predicate", spec.predicate, "select predicate as column,comparator,literal");
  cmd->add_option("--columns", spec.project_columns, "project column indices")->delimiter(',');
}

int RunBenchRankAndPrint(Context &ctx, const BenchSpec &spec) {
  const auto inputs = LoadRankInputs(spec, ctx.rank(), ctx.world_size());
  const auto report = RunBenchRank(ctx, spec, inputs);
  if (ctx.rank() == 0) std::cout << report.ToCsv() << std::flush;
  return 0;
}

int RunVerifyRankAndPrint(Context &ctx, const BenchSpec &spec) {
  const auto inputs = LoadRankInputs(spec, ctx.rank(), ctx.world_size());
  const auto result = RunVerifyRank(ctx, spec, inputs);
  if (ctx.rank() != 0) return 0;
  std::cout << result.Summary() << std::flush;
  return result.passed ? 0 : kExitMismatch;
}

/// Forks one `worker` process per rank and waits; the first failure stops the rest.
int LaunchTcpWorkers(const std::string &mode, int world_size, const std::vector<std::string> &args) {
  const auto ports = FindFreeLoopbackPorts(world_size);
  std::string peers;
  for (int r = 0; r < world_size; ++r) {
    if (r) peers += ',';
    peers += "127.0.0.1:" + std::to_string(ports[static_cast<size_t>(r)]);
  }

  std::vector<std::string> child_args{"shard", "worker", "--mode", mode};
  child_args.insert(child_args.end(), args.begin(), args.end());
  std::vector<char *> argv;
  for (auto &a : child_args) argv.push_back(a.data());
  argv.push_back(nullptr);

  std::cout.flush();
  std::vector<pid_t> pids;
  for (int r = 0; r < world_size; ++r) {
    const pid_t pid = fork();
    if (pid < 0) throw Error(ErrorCode::kIo, "fork failed");
    if (pid == 0) {
      setenv(kEnvRank, std::to_string(r).c_str(), 1);
      setenv(kEnvWorldSize, std::to_string(world_size).c_str(), 1);
      setenv(kEnvPeers, peers.c_str(), 1);
      execv("/proc/self/exe", argv.data());
      _exit(127);
    }
    pids.push_back(pid);
  }

  int exit_code = 0;
  for (size_t remaining = pids.size(); remaining > 0; --remaining) {
    int status = 0;
    const pid_t done = waitpid(-1, &status, 0);
    if (done < 0) break;
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : kExitError;
    if (code != 0 && exit_code == 0) {
      exit_code = code;
      for (pid_t p : pids) {
        if (p != done) kill(p, SIGTERM);
      }
    }
  }
  return exit_code;
}

int RunMode(const std::string &mode, BenchSpec spec, const std::vector<std::string> &args) {
  spec.Validate();
  if (spec.transport == TransportKind::kTcp && spec.world_size > 1) {
    return LaunchTcpWorkers(mode, spec.world_size, args);
  }
  if (mode == "bench") {
    const auto report = RunBenchInProcess(spec);
    std::cout << report.ToCsv() << std::flush;
    return 0;
  }
  const auto result = RunVerifyInProcess(spec);
  std::cout << result.Summary() << std::flush;
  return result.passed ? 0 : kExitMismatch;
}

int RunWorker(const std::string &mode, BenchSpec spec) {
  auto ctx = InitTcp(TcpOptions::FromEnvironment());
  spec.world_size = ctx.world_size();
  spec.transport = TransportKind::kTcp;
  const int code = mode == "bench" ? RunBenchRankAndPrint(ctx, spec) : RunVerifyRankAndPrint(ctx, spec);
  ctx.Finalize();
  return code;
}

}  // namespace

int main(int argc, char **argv) {
  google::InitGoogleLogging(argv[0]);
  FLAGS_logtostderr = true;
  FLAGS_minloglevel = google::GLOG_WARNING;

  CLI::App app{"Distributed columnar relational operators: data generation, benchmarks, verification"};
  app.require_subcommand(1);

  GenSpec gen;
  auto *gen_cmd = app.add_subcommand("gen", "Write synthetic CSV partitions <prefix>_<rank>.csv");
  gen_cmd->add_option("--rows", gen.rows, "Total rows")->required();
  gen_cmd->add_option("--layout,--cols", gen.layout, "paper4 or paper2")
      ->transform(CLI::CheckedTransformer(NameMap({Layout::kPaper4, Layout::kPaper2}, LayoutName)));
  gen_cmd->add_option("--seed", gen.seed, "Generator seed");
  gen_cmd->add_option("--key-domain", gen.key_domain, "Distinct keys (default rows/4)");
  gen_cmd->add_option("--prefix", gen.prefix, "Output prefix")->required();
  gen_cmd->add_option("--parts", gen.parts, "Number of files")->check(CLI::PositiveNumber);

  BenchSpec bench_spec;
  auto *bench_cmd = app.add_subcommand("bench", "Time a distributed operator; CSV report on stdout");
  AddSpecOptions(bench_cmd, bench_spec);

  BenchSpec verify_spec;
  auto *verify_cmd = app.add_subcommand("verify", "Compare a distributed operator against the local one");
  AddSpecOptions(verify_cmd, verify_spec);
  verify_cmd->add_flag("--inject-fault", verify_spec.inject_fault, "Drop a row per worker (negative test)");

  BenchSpec worker_spec;
  std::string worker_mode = "bench";
  auto *worker_cmd = app.add_subcommand(
      "worker", "Run one rank of bench or verify; reads SHARD_RANK, SHARD_WORLD_SIZE and SHARD_PEERS");
  worker_cmd->add_option("--mode", worker_mode, "bench or verify")->check(CLI::IsMember({"bench", "verify"}));
  AddSpecOptions(worker_cmd, worker_spec);
  worker_cmd->add_flag("--inject-fault", worker_spec.inject_fault, "Drop a row per worker (negative test)");

  CLI11_PARSE(app, argc, argv);

  // Arguments after the subcommand name, forwarded to tcp workers.
  std::vector<std::string> forwarded;
  for (int i = 2; i < argc; ++i) forwarded.emplace_back(argv[i]);

  try {
    if (*gen_cmd) {
      for (const auto &path : Generate(gen)) std::cout << path.string() << "\n";
      return 0;
    }
    if (*bench_cmd) return RunMode("bench", bench_spec, forwarded);
    if (*verify_cmd) return RunMode("verify", verify_spec, forwarded);
    if (*worker_cmd) return RunWorker(worker_mode, worker_spec);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
