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

#ifndef SHARD_WIRE_HPP
#define SHARD_WIRE_HPP

#include <cstdint>
#include <span>

#include "shard/table.hpp"
#include "shard/transport.hpp"

namespace shard {

/**
 * Binary table layout used for exchange. All integers little-endian.
 *
 *   u32 column count | u64 row count
 *   per column:
 *     u8 dtype code (0 int64, 1 float64, 2 utf8, 3 bool) | u8 has-validity
 *     [validity bitmap, ceil(rows / 8) bytes, LSB first]   if has-validity
 *     int64 / float64: rows x 8 bytes
 *     bool:            rows x 1 byte
 *     utf8:            u64 offset count (rows + 1) | offsets x 8 bytes | bytes
 *
 * Field names are not transmitted; the receiver supplies the schema.
 */
Bytes SerializeTable(const Table &table);

/// Throws WireFormatError on truncation, trailing bytes, dtype mismatch or bad offsets.
Table DeserializeTable(std::span<const uint8_t> wire, const Schema &schema);

}  // namespace shard

#endif  // SHARD_WIRE_HPP
