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

#ifndef SHARD_SRC_KEY_INDEX_HPP
#define SHARD_SRC_KEY_INDEX_HPP

#include <algorithm>
#include <bit>
#include <cstdint>
#include <string_view>
#include <vector>

#include "shard/row_encoding.hpp"

namespace shard::detail {

/**
 * Open-addressing map from a row encoding to a dense group id. Groups are
 * numbered in first-insertion order. Capacity is fixed by `max_keys`.
 */
class KeyIndex {
 public:
  KeyIndex(const EncodedRows &keys, int64_t max_keys) : keys_(keys) {
    const auto want = static_cast<uint64_t>(std::max<int64_t>(16, max_keys * 2));
    const uint64_t cap = std::bit_ceil(want);
    slots_.assign(cap, -1);
    mask_ = cap - 1;
    group_row_.reserve(static_cast<size_t>(max_keys));
  }

  /// Group id of the row's key, creating a new group if unseen.
  int64_t Insert(int64_t row) {
    const auto key = keys_[row];
    uint64_t pos = Mix(HashRow(key)) & mask_;
    while (true) {
      const int64_t g = slots_[pos];
      if (g < 0) {
        const auto id = static_cast<int64_t>(group_row_.size());
        slots_[pos] = id;
        group_row_.push_back(row);
        return id;
      }
      if (keys_[group_row_[static_cast<size_t>(g)]] == key) return g;
      pos = (pos + 1) & mask_;
    }
  }

  /// Group id of `key` (encoded against another table), or -1.
  int64_t Find(std::string_view key) const {
    uint64_t pos = Mix(HashRow(key)) & mask_;
    while (true) {
      const int64_t g = slots_[pos];
      if (g < 0) return -1;
      if (keys_[group_row_[static_cast<size_t>(g)]] == key) return g;
      pos = (pos + 1) & mask_;
    }
  }

  int64_t num_groups() const { return static_cast<int64_t>(group_row_.size()); }

 private:
  // FNV-1a low bits are weak for short keys; finalize before masking.
  static uint64_t Mix(uint64_t h) {
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    return h;
  }

  const EncodedRows &keys_;
  std::vector<int64_t> slots_;
  std::vector<int64_t> group_row_;
  uint64_t mask_ = 0;
};

}  // namespace shard::detail

#endif  // SHARD_SRC_KEY_INDEX_HPP
