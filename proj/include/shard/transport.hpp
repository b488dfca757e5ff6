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

#ifndef SHARD_TRANSPORT_HPP
#define SHARD_TRANSPORT_HPP

#include <chrono>
#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

namespace shard {

using Bytes = std::vector<uint8_t>;
using Tag = uint32_t;

/// User tags must stay below this; higher tags belong to collectives.
inline constexpr Tag kCollectiveTagBase = 0x40000000u;
inline constexpr Tag kBarrierTagBase = 0x80000000u;

inline constexpr std::chrono::milliseconds kDefaultIdleTimeout{60000};

/**
 * Point-to-point message exchange between the workers of one run.
 *
 * Send is asynchronous: it returns once the payload is queued or handed to
 * the network. Receive blocks until the next message from `source` carrying
 * `tag` arrives; messages with the same (source, dest, tag) arrive in send
 * order, exactly once. Self-sends are delivered through a local queue.
 *
 * An implementation may progress I/O on internal threads, but each instance
 * is driven by a single owner thread.
 */
class Transport {
 public:
  virtual ~Transport() = default;

  virtual std::string_view name() const = 0;
  virtual int rank() const = 0;
  virtual int world_size() const = 0;

  /// Throws TransportError when the peer is unreachable.
  virtual void Send(int dest, Tag tag, Bytes payload) = 0;
  /// Throws TransportError, or DeadlockTimeout after the idle limit.
  virtual Bytes Receive(int source, Tag tag) = 0;
  /// Releases connections. Called once.
  virtual void Close() = 0;
};

/**
 * A worker's identity bound to a transport. Adds the checks shared by every
 * transport (rank range, use after finalize), collective sequence numbers
 * and a barrier built on point-to-point messages.
 */
class Context {
 public:
  explicit Context(std::unique_ptr<Transport> transport);
  ~Context();

  Context(Context &&) noexcept;
  Context &operator=(Context &&) noexcept;
  Context(const Context &) = delete;
  Context &operator=(const Context &) = delete;

  int rank() const { return rank_; }
  int world_size() const { return world_size_; }
  std::string_view transport_name() const;

  void Send(int dest, Tag tag, Bytes payload);
  Bytes Receive(int source, Tag tag);

  /// No worker returns until every worker has entered.
  void Barrier();

  /**
   * Tag for the next collective operation. Every worker must run the same
   * sequence of collectives so the numbers agree.
   */
  Tag NextSequence();

  /// Closes the transport. Further calls log a warning and return.
  void Finalize();
  bool finalized() const { return finalized_; }

 private:
  void CheckUsable(int peer, std::string_view what) const;

  std::unique_ptr<Transport> transport_;
  int rank_ = 0;
  int world_size_ = 1;
  Tag collective_seq_ = 0;
  Tag barrier_seq_ = 0;
  bool finalized_ = false;
};

}  // namespace shard

#endif  // SHARD_TRANSPORT_HPP
