// Copyright 2026 The sessec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "sessec/session.hpp"

// Reconnection-based session delegation (the Resending protocol), in its
// original form and with credential checking. Three roles take part:
//   session-sender   delegates its side of `target` over `carrier`
//   session-receiver receives the session over `carrier` and accepts the reconnection
//   passive party    is told to reconnect while in the middle of its session
// The passive side runs transparently inside Session receive operations.

namespace sessec {

struct Credential {
  static constexpr std::size_t kSize = 32;
  std::array<std::uint8_t, kSize> bytes{};

  ByteView view() const { return ByteView(bytes.data(), bytes.size()); }
  static Credential from(ByteView b);
};

/// 32 bytes from the system CSPRNG; Error(EntropyFailure) if it fails.
Credential make_credential();
/// Constant-time equality.
bool check_credential(const Credential& expected, const Credential& presented);

/// Tells the passive party where its session moved.
/// Wire: progress u32 | blob16 rendered remaining type | str8 host | u16 port | [32-byte credential]
struct DelegationSignal {
  /// Frames of the passive party the sender consumed before delegating.
  std::uint32_t progress = 0;
  SessionType remaining_type;
  std::string receiver_host;
  std::uint16_t receiver_port = 0;
  std::optional<Credential> credential;

  Bytes encode() const;
  /// Error(MalformedFrame) on bad input.
  static DelegationSignal decode(ByteView payload);
};

enum class DelegationStatus { Completed, CredentialRejected, Aborted };

std::string_view status_name(DelegationStatus s);

struct DelegationOutcome {
  DelegationStatus status = DelegationStatus::Aborted;
  std::string reason;
  /// Receiver side: the session now connected to the passive party.
  std::unique_ptr<Session> migrated;
};

/// Session-sender. `carrier`'s next action must be the send of `target`'s
/// remaining type; otherwise Error(TypeMismatch). Transport failures and the
/// acknowledgement timeout yield status Aborted.
DelegationOutcome delegate(Session& target, Session& carrier, bool secure);

/// Session-receiver. `carrier`'s next action must be the matching receive.
/// Errors: Error(InconsistentTypes) if the resent frames violate the monitor.
DelegationOutcome receive_delegation(Session& carrier, bool secure);

/// Passive party: receives the next frame, which must be a delegation signal,
/// and moves `target` to the new connection. Receive operations on a Session
/// do this automatically. Errors: DelegationRefused, ConnectionRefused,
/// InconsistentTypes.
void handle_delegation_signal(Session& target);

}  // namespace sessec
