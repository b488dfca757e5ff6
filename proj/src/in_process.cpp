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

#include "shard/in_process.hpp"

#include <memory>
#include <mutex>
#include <thread>

#include "mailbox.hpp"
#include "shard/error.hpp"

namespace shard {

namespace {

struct Hub {
  explicit Hub(int n) : mailboxes(static_cast<size_t>(n)) {}

  void CancelAll(const std::string &reason) {
    for (auto &m : mailboxes) m.Cancel(reason);
  }

  std::vector<detail::Mailbox> mailboxes;
};

class InProcessTransport final : public Transport {
 public:
  InProcessTransport(std::shared_ptr<Hub> hub, int rank, std::chrono::milliseconds idle)
      : hub_(std::move(hub)), rank_(rank), idle_(idle) {}

  std::string_view name() const override { return "inprocess"; }
  int rank() const override { return rank_; }
  int world_size() const override { return static_cast<int>(hub_->mailboxes.size()); }

  void Send(int dest, Tag tag, Bytes payload) override {
    hub_->mailboxes[static_cast<size_t>(dest)].Push(rank_, tag, std::move(payload));
  }

  Bytes Receive(int source, Tag tag) override {
    return hub_->mailboxes[static_cast<size_t>(rank_)].Pop(rank_, source, tag, idle_);
  }

  void Close() override {
    for (size_t r = 0; r < hub_->mailboxes.size(); ++r) {
      if (static_cast<int>(r) != rank_) hub_->mailboxes[r].MarkClosed(rank_, "peer finalized");
    }
  }

 private:
  std::shared_ptr<Hub> hub_;
  int rank_;
  std::chrono::milliseconds idle_;
};

}  // namespace

void RunInProcessWorkers(int world_size, const std::function<void(Context &)> &body,
                         const InProcessOptions &options) {
  if (world_size < 1) {
    throw Error(ErrorCode::kConfig, "world size must be at least 1, got " + std::to_string(world_size));
  }
  auto hub = std::make_shared<Hub>(world_size);
  std::mutex error_mu;
  std::optional<std::string> first_error;

  auto run = [&](int rank) {
    // The context outlives the handlers: a failing worker records its error
    // before its peers see it as closed.
    std::optional<Context> ctx;
    try {
      ctx.emplace(std::make_unique<InProcessTransport>(hub, rank, options.idle_timeout));
      body(*ctx);
      if (!ctx->finalized()) ctx->Finalize();
    } catch (const std::exception &e) {
      {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = "worker " + std::to_string(rank) + ": " + e.what();
      }
      hub->CancelAll("run cancelled after worker " + std::to_string(rank) + " failed");
    } catch (...) {
      {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = "worker " + std::to_string(rank) + ": unknown exception";
      }
      hub->CancelAll("run cancelled after worker " + std::to_string(rank) + " failed");
    }
  };

  if (world_size == 1) {
    run(0);
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<size_t>(world_size));
    for (int r = 0; r < world_size; ++r) threads.emplace_back(run, r);
    for (auto &t : threads) t.join();
  }
  if (first_error) throw Error(ErrorCode::kWorkerPanic, *first_error);
}

}  // namespace shard
