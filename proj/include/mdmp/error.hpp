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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mdmp {

enum class Errc {
  NestedRegion,
  OpenIteration,
  PendingCommunication,
  Unbalanced,
  InactiveRegion,
  IndexOutOfBounds,
  RangeError,
  OverlapConflict,
  DirectiveMismatch,
  CounterOverflow,
  TransportFailure,
  LengthMismatch,
  PeerUnreachable,
  ProtocolError,
  ConfigError,
  MismatchedKernels,
};

constexpr std::string_view to_string(Errc e) {
  switch (e) {
    case Errc::NestedRegion: return "NestedRegion";
    case Errc::OpenIteration: return "OpenIteration";
    case Errc::PendingCommunication: return "PendingCommunication";
    case Errc::Unbalanced: return "Unbalanced";
    case Errc::InactiveRegion: return "InactiveRegion";
    case Errc::IndexOutOfBounds: return "IndexOutOfBounds";
    case Errc::RangeError: return "RangeError";
    case Errc::OverlapConflict: return "OverlapConflict";
    case Errc::DirectiveMismatch: return "DirectiveMismatch";
    case Errc::CounterOverflow: return "CounterOverflow";
    case Errc::TransportFailure: return "TransportFailure";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::PeerUnreachable: return "PeerUnreachable";
    case Errc::ProtocolError: return "ProtocolError";
    case Errc::ConfigError: return "ConfigError";
    case Errc::MismatchedKernels: return "MismatchedKernels";
  }
  return "Unknown";
}

/// Every failure raised by the runtime, the transports and the benchmarks.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace mdmp
