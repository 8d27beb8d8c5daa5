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

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "sessec/session_type.hpp"
#include "sessec/srp.hpp"
#include "sessec/transcript.hpp"
#include "sessec/transport.hpp"

namespace sessec {

/// A value carried by a DATA frame. The runtime never inspects `bytes`.
struct TypedValue {
  std::string type_name;
  Bytes bytes;

  static TypedValue of(std::string type_name, std::string_view text) { return {std::move(type_name), to_bytes(text)}; }
  std::string text() const { return to_string(bytes); }

  friend bool operator==(const TypedValue&, const TypedValue&) = default;
};

struct SrpIdentity {
  std::string username;
  std::string password;
  std::string group = "rfc5054-1024";
};

struct SessionConfig {
  /// Network of the host this endpoint runs on; used to reconnect or listen during delegation.
  std::shared_ptr<Network> network;
  std::string role = "?";
  /// Logical channel name used in transcripts.
  std::string channel = "s";
  std::shared_ptr<Transcript> transcript;
  /// Run the credential-checking delegation protocol.
  bool secure_delegation = false;
  /// Authenticate outgoing connections with SRP under this identity.
  std::optional<SrpIdentity> srp_identity;
  /// Require SRP on accepted connections, checked against this registry.
  std::shared_ptr<const Registry> srp_registry;
  SrpOptions srp;
  Millis timeout{5000};
  /// Sees every credential this endpoint creates or presents.
  std::function<void(ByteView)> credential_observer;
};

enum class SessionState { Active, Delegating, Closed };
enum class SessionRole { Initiator, Acceptor };

/// Monitored session endpoint. Every operation checks the head of the local
/// remaining type; a violation aborts the session (closing the channel) and
/// throws Error(TypeMismatch).
///
/// Frames sent on the session carry the count of peer frames consumed so far,
/// which lets the peer drop acknowledged frames from its resend buffer.
class Session {
 public:
  Session(std::unique_ptr<Channel> channel, SessionType local_remaining, SessionRole role, SessionConfig cfg);
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  void send_value(const TypedValue& v);
  TypedValue recv_value();
  void select_label(const std::string& label);
  std::string offer_labels();
  void iter_continue(bool again);
  bool iter_follow();
  /// Sends CLOSE and closes the channel. Idempotent. Throws
  /// Error(PrematureClose) after closing if the remaining type is not End.
  void close();

  const SessionType& remaining() const { return remaining_; }
  SessionState state() const { return state_; }
  SessionRole role() const { return role_; }
  const SessionConfig& config() const { return cfg_; }
  SessionConfig& config() { return cfg_; }

  Channel& channel() { return *channel_; }
  const Channel& channel() const { return *channel_; }
  /// SRP identity the peer authenticated as, when the channel is secured.
  std::string peer_identity() const;

  std::size_t unacked_count() const { return sent_unacked_.size(); }
  std::uint32_t sent_count() const { return next_seq_; }
  std::uint32_t consumed_count() const { return consumed_; }

 private:
  friend struct SessionInternals;

  void log(const std::string& action, const std::string& step = {}, const std::string& detail = {});
  void require_active(const char* op) const;
  [[noreturn]] void abort_mismatch(const std::string& what);
  void advance_or_abort(const CommEvent& e);
  void send_session_frame(FrameTag tag, ByteWriter body);
  /// Next DATA/BRANCH/ITER frame for this session with the progress counter
  /// stripped, handling a delegation signal transparently.
  Frame next_session_frame();
  /// Passive-party side of delegation; replaces the channel in place.
  void migrate(const Frame& ds);

  std::unique_ptr<Channel> channel_;
  SessionType remaining_;
  SessionRole role_;
  SessionState state_ = SessionState::Active;
  SessionConfig cfg_;
  std::deque<std::pair<std::uint32_t, Frame>> sent_unacked_;
  std::uint32_t next_seq_ = 0;
  std::uint32_t consumed_ = 0;
  /// Frames replayed from a lost-message resend, delivered before the channel.
  std::deque<Frame> inbox_;
};

/// Connects to `addr`, optionally authenticates with SRP, exchanges rendered
/// types and checks duality. `t` must be rooted at cbegin.
/// Errors: NonDualPeer, InvalidArgument, transport and SRP errors.
std::unique_ptr<Session> request_session(Network& net, const Address& addr, const SessionType& t, SessionConfig cfg);

/// Acceptor-side mirror of request_session; `t` must be rooted at sbegin.
std::unique_ptr<Session> accept_session(Acceptor& acceptor, const SessionType& t, SessionConfig cfg);

// Wire helpers shared with the delegation layer.
Bytes encode_data(std::uint32_t progress, const TypedValue& v);

}  // namespace sessec
