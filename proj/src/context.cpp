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

#include <glog/logging.h>

#include "shard/error.hpp"
#include "shard/transport.hpp"

namespace shard {

Context::Context(std::unique_ptr<Transport> transport) : transport_(std::move(transport)) {
  if (!transport_) throw Error(ErrorCode::kConfig, "context needs a transport");
  rank_ = transport_->rank();
  world_size_ = transport_->world_size();
  if (world_size_ < 1 || rank_ < 0 || rank_ >= world_size_) {
    throw Error(ErrorCode::kConfig, "invalid rank " + std::to_string(rank_) + " for world size " +
                                        std::to_string(world_size_));
  }
}

Context::~Context() {
  if (transport_ && !finalized_) {
    try {
      Finalize();
    } catch (const std::exception &e) {
      LOG(WARNING) << "finalize during destruction failed: " << e.what();
    }
  }
}

Context::Context(Context &&other) noexcept
    : transport_(std::move(other.transport_)),
      rank_(other.rank_),
      world_size_(other.world_size_),
      collective_seq_(other.collective_seq_),
      barrier_seq_(other.barrier_seq_),
      finalized_(other.finalized_) {
  other.finalized_ = true;
}

Context &Context::operator=(Context &&other) noexcept {
  if (this != &other) {
    if (transport_ && !finalized_) {
      try {
        Finalize();
      } catch (...) {
      }
    }
    transport_ = std::move(other.transport_);
    rank_ = other.rank_;
    world_size_ = other.world_size_;
    collective_seq_ = other.collective_seq_;
    barrier_seq_ = other.barrier_seq_;
    finalized_ = other.finalized_;
    other.finalized_ = true;
  }
  return *this;
}

std::string_view Context::transport_name() const {
  return transport_ ? transport_->name() : std::string_view("none");
}

void Context::CheckUsable(int peer, std::string_view what) const {
  if (finalized_ || !transport_) {
    throw Error(ErrorCode::kFinalized, std::string(what) + " on a finalized context");
  }
  if (peer < 0 || peer >= world_size_) {
    throw Error(ErrorCode::kIndex, std::string(what) + " peer " + std::to_string(peer) +
                                       " outside world of size " + std::to_string(world_size_));
  }
}

void Context::Send(int dest, Tag tag, Bytes payload) {
  CheckUsable(dest, "send");
  transport_->Send(dest, tag, std::move(payload));
}

Bytes Context::Receive(int source, Tag tag) {
  CheckUsable(source, "receive");
  return transport_->Receive(source, tag);
}

void Context::Barrier() {
  CheckUsable(rank_, "barrier");
  const Tag tag = kBarrierTagBase + barrier_seq_++;
  for (int step = 1; step < world_size_; ++step) {
    transport_->Send((rank_ + step) % world_size_, tag, {});
  }
  for (int step = 1; step < world_size_; ++step) {
    transport_->Receive((rank_ - step + world_size_) % world_size_, tag);
  }
}

Tag Context::NextSequence() {
  return kCollectiveTagBase + (collective_seq_++ % (kBarrierTagBase - kCollectiveTagBase));
}

void Context::Finalize() {
  if (finalized_) {
    LOG(WARNING) << "rank " << rank_ << ": finalize called on an already finalized context";
    return;
  }
  finalized_ = true;
  transport_->Close();
}

}  // namespace shard
