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

#ifndef SHARD_SRC_MAILBOX_HPP
#define SHARD_SRC_MAILBOX_HPP

#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>

#include "shard/error.hpp"
#include "shard/transport.hpp"

namespace shard::detail {

/// Per-destination inbox: FIFO queues keyed by (source, tag).
class Mailbox {
 public:
  void Push(int source, Tag tag, Bytes payload) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      queues_[{source, tag}].push_back(std::move(payload));
    }
    cv_.notify_all();
  }

  Bytes Pop(int self, int source, Tag tag, std::chrono::milliseconds idle_limit) {
    std::unique_lock<std::mutex> lock(mu_);
    const auto key = std::make_pair(source, tag);
    const auto deadline = std::chrono::steady_clock::now() + idle_limit;
    while (true) {
      auto it = queues_.find(key);
      if (it != queues_.end() && !it->second.empty()) {
        Bytes out = std::move(it->second.front());
        it->second.pop_front();
        if (it->second.empty()) queues_.erase(it);
        return out;
      }
      if (cancelled_) {
        throw Error(ErrorCode::kTransport, "rank " + std::to_string(self) + ": " + *cancelled_);
      }
      if (auto closed = closed_.find(source); closed != closed_.end()) {
        throw Error(ErrorCode::kTransport, "rank " + std::to_string(self) + ": connection to rank " +
                                               std::to_string(source) + " lost: " + closed->second);
      }
      if (cv_.wait_until(lock, deadline) == std::cv_status::timeout) {
        auto again = queues_.find(key);
        if (again != queues_.end() && !again->second.empty()) continue;
        throw Error(ErrorCode::kDeadlockTimeout,
                    "rank " + std::to_string(self) + " waited " + std::to_string(idle_limit.count()) +
                        " ms for tag " + std::to_string(tag) + " from rank " + std::to_string(source));
      }
    }
  }

  /// Wakes every pending Pop with a TransportError.
  void Cancel(std::string reason) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (!cancelled_) cancelled_ = std::move(reason);
    }
    cv_.notify_all();
  }

  /// Queued messages from `source` stay receivable; waits beyond them fail.
  void MarkClosed(int source, std::string reason) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      closed_.emplace(source, std::move(reason));
    }
    cv_.notify_all();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::pair<int, Tag>, std::deque<Bytes>> queues_;
  std::optional<std::string> cancelled_;
  std::map<int, std::string> closed_;
};

}  // namespace shard::detail

#endif  // SHARD_SRC_MAILBOX_HPP
