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

#ifndef SHARD_IN_PROCESS_HPP
#define SHARD_IN_PROCESS_HPP

#include <chrono>
#include <functional>
#include <optional>
#include <type_traits>
#include <vector>

#include "shard/transport.hpp"

namespace shard {

struct InProcessOptions {
  std::chrono::milliseconds idle_timeout = kDefaultIdleTimeout;
};

/**
 * Runs `world_size` workers on their own threads, each with a Context over a
 * shared in-memory mailbox, and waits for all of them. If any worker throws,
 * the others' pending receives are cancelled and WorkerPanicError is raised
 * carrying the first failure.
 */
void RunInProcessWorkers(int world_size, const std::function<void(Context &)> &body,
                         const InProcessOptions &options = {});

/// Typed wrapper collecting each worker's return value, indexed by rank.
template <typename Fn>
auto RunInProcess(int world_size, Fn &&body, const InProcessOptions &options = {}) {
  using Result = std::invoke_result_t<Fn &, Context &>;
  if constexpr (std::is_void_v<Result>) {
    RunInProcessWorkers(world_size, [&](Context &ctx) { body(ctx); }, options);
  } else {
    std::vector<std::optional<Result>> slots(static_cast<size_t>(world_size > 0 ? world_size : 0));
    RunInProcessWorkers(
        world_size, [&](Context &ctx) { slots[static_cast<size_t>(ctx.rank())].emplace(body(ctx)); },
        options);
    std::vector<Result> out;
    out.reserve(slots.size());
    for (auto &s : slots) out.push_back(std::move(*s));
    return out;
  }
}

}  // namespace shard

#endif  // SHARD_IN_PROCESS_HPP
