/* Copyright 2026 The mdmp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Socket frame layout, all integers little-endian:
//
//   offset  size  field
//        0     4  magic 0x4D444D50 ("MDMP")
//        4     4  sender rank
//        8     8  tag
//       16     4  payload length in bytes
//       20     n  payload

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mdmp::wire {

inline constexpr std::uint32_t kMagic = 0x4D444D50;
inline constexpr std::size_t kHeaderSize = 20;

struct FrameHeader {
  std::uint32_t sender = 0;
  std::uint64_t tag = 0;
  std::uint32_t length = 0;
};

void put_u32(std::byte* out, std::uint32_t v);
void put_u64(std::byte* out, std::uint64_t v);
std::uint32_t get_u32(const std::byte* in);
std::uint64_t get_u64(const std::byte* in);

std::vector<std::byte> encode_frame(std::uint32_t sender, std::uint64_t tag,
                                    std::span<const std::byte> payload);

/// Throws ProtocolError on a bad magic number.
FrameHeader decode_header(std::span<const std::byte, kHeaderSize> bytes);

}  // namespace mdmp::wire
