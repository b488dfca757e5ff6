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

#include "shard/tcp_transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include <glog/logging.h>

#include "mailbox.hpp"
#include "shard/error.hpp"

namespace shard {

std::array<uint8_t, FrameHeader::kSize> FrameHeader::Encode() const {
  std::array<uint8_t, kSize> out{};
  for (int i = 0; i < 4; ++i) out[static_cast<size_t>(i)] = static_cast<uint8_t>(tag >> (8 * i));
  for (int i = 0; i < 4; ++i) out[static_cast<size_t>(4 + i)] = static_cast<uint8_t>(source >> (8 * i));
  for (int i = 0; i < 8; ++i) out[static_cast<size_t>(8 + i)] = static_cast<uint8_t>(length >> (8 * i));
  return out;
}

FrameHeader FrameHeader::Decode(const uint8_t *bytes) {
  FrameHeader h;
  for (int i = 0; i < 4; ++i) h.tag |= static_cast<Tag>(bytes[i]) << (8 * i);
  for (int i = 0; i < 4; ++i) h.source |= static_cast<uint32_t>(bytes[4 + i]) << (8 * i);
  for (int i = 0; i < 8; ++i) h.length |= static_cast<uint64_t>(bytes[8 + i]) << (8 * i);
  return h;
}

std::vector<std::string> ParsePeerList(const std::string &peers) {
  std::vector<std::string> out;
  std::stringstream ss(peers);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

TcpOptions TcpOptions::FromEnvironment() {
  auto get = [](const char *name) -> std::string {
    const char *v = std::getenv(name);
    if (!v || !*v) throw Error(ErrorCode::kConfig, std::string(name) + " is not set");
    return v;
  };
  auto to_int = [](const char *name, const std::string &v) {
    try {
      size_t used = 0;
      const int out = std::stoi(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return out;
    } catch (const std::exception &) {
      throw Error(ErrorCode::kConfig, std::string(name) + "='" + v + "' is not an integer");
    }
  };
  TcpOptions opts;
  opts.rank = to_int(kEnvRank, get(kEnvRank));
  opts.world_size = to_int(kEnvWorldSize, get(kEnvWorldSize));
  opts.peers = ParsePeerList(get(kEnvPeers));
  return opts;
}

namespace {

constexpr Tag kHelloTag = 0xFFFFFFFFu;

struct HostPort {
  std::string host;
  std::string port;
};

HostPort SplitHostPort(const std::string &entry) {
  const auto colon = entry.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == entry.size()) {
    throw Error(ErrorCode::kConfig, "peer '" + entry + "' is not host:port");
  }
  return {entry.substr(0, colon), entry.substr(colon + 1)};
}

std::string ErrnoText() { return std::strerror(errno); }

bool WriteAll(int fd, const uint8_t *data, size_t n, int flags) {
  while (n > 0) {
    const ssize_t w = ::send(fd, data, n, MSG_NOSIGNAL | flags);
    if (w < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data += w;
    n -= static_cast<size_t>(w);
  }
  return true;
}

/// False on EOF or error.
bool ReadAll(int fd, uint8_t *data, size_t n) {
  while (n > 0) {
    const ssize_t r = ::recv(fd, data, n, 0);
    if (r == 0) return false;
    if (r < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data += r;
    n -= static_cast<size_t>(r);
  }
  return true;
}

void SetNoDelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

int ListenOn(const HostPort &hp) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw Error(ErrorCode::kConnect, "socket: " + ErrnoText());
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_ANY);
  int port = 0;
  try {
    port = std::stoi(hp.port);
  } catch (const std::exception &) {
    ::close(fd);
    throw Error(ErrorCode::kConfig, "bad port '" + hp.port + "'");
  }
  addr.sin_port = htons(static_cast<uint16_t>(port));
  if (::bind(fd, reinterpret_cast<sockaddr *>(&addr), sizeof(addr)) < 0 || ::listen(fd, 128) < 0) {
    const auto err = ErrnoText();
    ::close(fd);
    throw Error(ErrorCode::kConnect, "cannot listen on port " + hp.port + ": " + err);
  }
  return fd;
}

int TryConnect(const HostPort &hp) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo *res = nullptr;
  if (::getaddrinfo(hp.host.c_str(), hp.port.c_str(), &hints, &res) != 0 || !res) return -1;
  int fd = -1;
  for (addrinfo *ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  return fd;
}

class TcpTransport final : public Transport {
 public:
  explicit TcpTransport(const TcpOptions &options)
      : rank_(options.rank), world_size_(options.world_size), idle_(options.idle_timeout) {
    peers_.resize(static_cast<size_t>(world_size_));
    for (auto &p : peers_) p = std::make_unique<Peer>();
    if (world_size_ > 1) Connect(options);
  }

  ~TcpTransport() override {
    if (!closed_) Close();
  }

  std::string_view name() const override { return "tcp"; }
  int rank() const override { return rank_; }
  int world_size() const override { return world_size_; }

  void Send(int dest, Tag tag, Bytes payload) override {
    if (dest == rank_) {
      inbox_.Push(rank_, tag, std::move(payload));
      return;
    }
    auto &peer = *peers_[static_cast<size_t>(dest)];
    FrameHeader header{tag, static_cast<uint32_t>(rank_), payload.size()};
    const auto head = header.Encode();
    std::lock_guard<std::mutex> lock(peer.send_mu);
    if (peer.fd < 0 || !WriteAll(peer.fd, head.data(), head.size(), payload.empty() ? 0 : MSG_MORE) ||
        !WriteAll(peer.fd, payload.data(), payload.size(), 0)) {
      throw Error(ErrorCode::kTransport, "rank " + std::to_string(rank_) + ": send to rank " +
                                             std::to_string(dest) + " failed: " + ErrnoText());
    }
  }

  Bytes Receive(int source, Tag tag) override { return inbox_.Pop(rank_, source, tag, idle_); }

  void Close() override {
    if (closed_) return;
    closed_ = true;
    for (auto &p : peers_) {
      if (p->fd >= 0) ::shutdown(p->fd, SHUT_WR);
    }
    // Drain until every peer has closed its side, bounded by the idle limit.
    const auto deadline = std::chrono::steady_clock::now() + idle_;
    for (auto &p : peers_) {
      if (!p->reader.joinable()) continue;
      while (!p->done.load() && std::chrono::steady_clock::now() < deadline) {
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
      }
      if (!p->done.load()) ::shutdown(p->fd, SHUT_RDWR);
      p->reader.join();
    }
    for (auto &p : peers_) {
      if (p->fd >= 0) ::close(p->fd);
      p->fd = -1;
    }
  }

 private:
  struct Peer {
    int fd = -1;
    std::mutex send_mu;
    std::thread reader;
    std::atomic<bool> done{false};
  };

  void Connect(const TcpOptions &options) {
    const auto deadline = std::chrono::steady_clock::now() + options.connect_timeout;
    const int listen_fd = ListenOn(SplitHostPort(options.peers[static_cast<size_t>(rank_)]));
    std::exception_ptr accept_error;
    std::thread acceptor([&] {
      try {
        AcceptLower(listen_fd, deadline);
      } catch (...) {
        accept_error = std::current_exception();
      }
    });
    std::exception_ptr dial_error;
    try {
      for (int p = rank_ + 1; p < world_size_; ++p) {
        DialHigher(p, options, deadline);
      }
    } catch (...) {
      dial_error = std::current_exception();
    }
    acceptor.join();
    ::close(listen_fd);
    if (dial_error || accept_error) {
      for (auto &p : peers_) {
        if (p->fd >= 0) ::close(p->fd);
        p->fd = -1;
      }
      std::rethrow_exception(dial_error ? dial_error : accept_error);
    }
    for (int p = 0; p < world_size_; ++p) {
      if (p == rank_) continue;
      peers_[static_cast<size_t>(p)]->reader = std::thread([this, p] { ReaderLoop(p); });
    }
    VLOG(1) << "rank " << rank_ << ": tcp mesh of " << world_size_ << " ready";
  }

  void AcceptLower(int listen_fd, std::chrono::steady_clock::time_point deadline) {
    int pending = rank_;
    while (pending > 0) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) {
        std::string missing;
        for (int p = 0; p < rank_; ++p) {
          if (peers_[static_cast<size_t>(p)]->fd < 0) missing += " " + std::to_string(p);
        }
        throw Error(ErrorCode::kConnect, "rank " + std::to_string(rank_) +
                                             " timed out waiting for connections from ranks" + missing);
      }
      pollfd pfd{listen_fd, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, static_cast<int>(std::min<int64_t>(left.count(), 200)));
      if (ready <= 0) continue;
      const int fd = ::accept(listen_fd, nullptr, nullptr);
      if (fd < 0) continue;
      timeval tv{5, 0};
      ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
      uint8_t head[FrameHeader::kSize];
      if (!ReadAll(fd, head, sizeof(head))) {
        ::close(fd);
        continue;
      }
      const auto hello = FrameHeader::Decode(head);
      const auto source = static_cast<int>(hello.source);
      if (hello.tag != kHelloTag || hello.length != 0 || source >= rank_ ||
          peers_[static_cast<size_t>(source)]->fd >= 0) {
        LOG(WARNING) << "rank " << rank_ << ": rejecting unexpected handshake from rank " << source;
        ::close(fd);
        continue;
      }
      timeval none{0, 0};
      ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &none, sizeof(none));
      SetNoDelay(fd);
      peers_[static_cast<size_t>(source)]->fd = fd;
      --pending;
    }
  }

  void DialHigher(int p, const TcpOptions &options, std::chrono::steady_clock::time_point deadline) {
    const auto &entry = options.peers[static_cast<size_t>(p)];
    const auto hp = SplitHostPort(entry);
    int fd = -1;
    while ((fd = TryConnect(hp)) < 0) {
      if (std::chrono::steady_clock::now() + options.retry_backoff > deadline) {
        throw Error(ErrorCode::kConnect, "rank " + std::to_string(rank_) + " could not reach rank " +
                                             std::to_string(p) + " at " + entry);
      }
      std::this_thread::sleep_for(options.retry_backoff);
    }
    SetNoDelay(fd);
    const auto hello = FrameHeader{kHelloTag, static_cast<uint32_t>(rank_), 0}.Encode();
    if (!WriteAll(fd, hello.data(), hello.size(), 0)) {
      ::close(fd);
      throw Error(ErrorCode::kConnect, "handshake with rank " + std::to_string(p) + " failed");
    }
    peers_[static_cast<size_t>(p)]->fd = fd;
  }

  void ReaderLoop(int source) {
    auto &peer = *peers_[static_cast<size_t>(source)];
    uint8_t head[FrameHeader::kSize];
    while (true) {
      if (!ReadAll(peer.fd, head, sizeof(head))) {
        inbox_.MarkClosed(source, "connection closed");
        break;
      }
      const auto h = FrameHeader::Decode(head);
      if (static_cast<int>(h.source) != source) {
        inbox_.MarkClosed(source, "frame claims source " + std::to_string(h.source));
        break;
      }
      Bytes payload(h.length);
      if (h.length > 0 && !ReadAll(peer.fd, payload.data(), payload.size())) {
        inbox_.MarkClosed(source, "truncated frame");
        break;
      }
      inbox_.Push(source, h.tag, std::move(payload));
    }
    peer.done.store(true);
  }

  int rank_;
  int world_size_;
  std::chrono::milliseconds idle_;
  std::vector<std::unique_ptr<Peer>> peers_;
  detail::Mailbox inbox_;
  bool closed_ = false;
};

}  // namespace

Context InitTcp(const TcpOptions &options) {
  if (options.world_size < 1) {
    throw Error(ErrorCode::kConfig, "world size must be at least 1");
  }
  if (options.rank < 0 || options.rank >= options.world_size) {
    throw Error(ErrorCode::kConfig, "rank " + std::to_string(options.rank) + " outside world of size " +
                                        std::to_string(options.world_size));
  }
  if (options.world_size > 1 && static_cast<int>(options.peers.size()) != options.world_size) {
    throw Error(ErrorCode::kConfig, "peer list has " + std::to_string(options.peers.size()) +
                                        " entries for world size " + std::to_string(options.world_size));
  }
  return Context(std::make_unique<TcpTransport>(options));
}

std::vector<int> FindFreeLoopbackPorts(int count) {
  std::vector<int> fds;
  std::vector<int> ports;
  for (int i = 0; i < count; ++i) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) break;
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    socklen_t len = sizeof(addr);
    if (::bind(fd, reinterpret_cast<sockaddr *>(&addr), sizeof(addr)) < 0 ||
        ::getsockname(fd, reinterpret_cast<sockaddr *>(&addr), &len) < 0) {
      ::close(fd);
      break;
    }
    fds.push_back(fd);
    ports.push_back(ntohs(addr.sin_port));
  }
  for (int fd : fds) ::close(fd);
  if (static_cast<int>(ports.size()) != count) {
    throw Error(ErrorCode::kConnect, "could not reserve " + std::to_string(count) + " loopback ports");
  }
  return ports;
}

}  // namespace shard
