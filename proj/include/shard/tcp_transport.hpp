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

#ifndef SHARD_TCP_TRANSPORT_HPP
#define SHARD_TCP_TRANSPORT_HPP

#include <array>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shard/transport.hpp"

namespace shard {

inline constexpr const char *kEnvRank = "SHARD_RANK";
inline constexpr const char *kEnvWorldSize = "SHARD_WORLD_SIZE";
inline constexpr const char *kEnvPeers = "SHARD_PEERS";

struct TcpOptions {
  int rank = 0;
  int world_size = 1;
  /// host:port per rank; this worker listens on peers[rank].
  std::vector<std::string> peers;
  std::chrono::milliseconds connect_timeout{30000};
  std::chrono::milliseconds retry_backoff{100};
  std::chrono::milliseconds idle_timeout = kDefaultIdleTimeout;

  /// Fills rank, world size and peers from SHARD_RANK, SHARD_WORLD_SIZE and
  /// SHARD_PEERS (comma-separated). Throws ConfigError when any is missing.
  static TcpOptions FromEnvironment();
};

/// Splits "a:1,b:2" into its entries.
std::vector<std::string> ParsePeerList(const std::string &peers);

/**
 * Full-mesh TCP context. Lower ranks dial higher ranks; each connection
 * carries both directions. Frames are
 *   tag u32 LE | source rank u32 LE | payload length u64 LE | payload.
 * Throws ConfigError for an inconsistent peer list and ConnectError naming
 * the peer when the mesh is not complete within connect_timeout.
 */
Context InitTcp(const TcpOptions &options);

/// Frame header codec, exposed for wire-level tests.
struct FrameHeader {
  Tag tag = 0;
  uint32_t source = 0;
  uint64_t length = 0;

  static constexpr size_t kSize = 16;
  std::array<uint8_t, kSize> Encode() const;
  static FrameHeader Decode(const uint8_t *bytes);

  bool operator==(const FrameHeader &) const = default;
};

/// Finds `count` currently free loopback ports (test and launcher helper).
std::vector<int> FindFreeLoopbackPorts(int count);

}  // namespace shard

#endif  // SHARD_TCP_TRANSPORT_HPP
