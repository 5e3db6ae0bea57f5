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

#include "mdmp/wire.hpp"

#include <limits>
#include <sstream>

#include "mdmp/error.hpp"

namespace mdmp::wire {

void put_u32(std::byte* out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out[i] = static_cast<std::byte>((v >> (8 * i)) & 0xFFu);
}

void put_u64(std::byte* out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out[i] = static_cast<std::byte>((v >> (8 * i)) & 0xFFu);
}

std::uint32_t get_u32(const std::byte* in) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::to_integer<std::uint8_t>(in[i])) << (8 * i);
  return v;
}

std::uint64_t get_u64(const std::byte* in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::to_integer<std::uint8_t>(in[i])) << (8 * i);
  return v;
}

std::vector<std::byte> encode_frame(std::uint32_t sender, std::uint64_t tag,
                                    std::span<const std::byte> payload) {
  if (payload.size() > std::numeric_limits<std::uint32_t>::max())
    throw Error(Errc::ProtocolError, "payload too large for one frame");
  std::vector<std::byte> out(kHeaderSize + payload.size());
  put_u32(out.data(), kMagic);
  put_u32(out.data() + 4, sender);
  put_u64(out.data() + 8, tag);
  put_u32(out.data() + 16, static_cast<std::uint32_t>(payload.size()));
  std::copy(payload.begin(), payload.end(), out.begin() + kHeaderSize);
  return out;
}

FrameHeader decode_header(std::span<const std::byte, kHeaderSize> bytes) {
  const std::uint32_t magic = get_u32(bytes.data());
  if (magic != kMagic) {
    std::ostringstream os;
    os << "bad frame magic 0x" << std::hex << magic;
    throw Error(Errc::ProtocolError, os.str());
  }
  return FrameHeader{get_u32(bytes.data() + 4), get_u64(bytes.data() + 8),
                     get_u32(bytes.data() + 16)};
}

}  // namespace mdmp::wire
