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

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "sessec/bytes.hpp"

namespace sessec {

// ---------------------------------------------------------------------------
// Frames
//
// Wire format, identical on every transport:
//   1 byte tag | 3 bytes big-endian payload length | payload

enum class FrameTag : std::uint8_t {
  Data = 1,
  Branch = 2,
  Iter = 3,
  Close = 4,
  StartDelegation = 5,
  Port = 6,
  Ds = 7,
  DsAck = 8,
  Cred = 9,
  Lm = 10,
};

inline constexpr std::size_t kMaxFramePayload = (std::size_t{1} << 24) - 1;
inline constexpr std::size_t kFrameHeaderSize = 4;

struct Frame {
  FrameTag tag = FrameTag::Data;
  Bytes payload;

  friend bool operator==(const Frame&, const Frame&) = default;
};

std::string_view tag_name(FrameTag tag);
bool is_valid_tag(std::uint8_t byte);

/// Throws Error(FrameTooLarge) if the payload exceeds kMaxFramePayload.
Bytes encode_frame(const Frame& f);
/// Decodes exactly one frame; throws Error(MalformedFrame) on a bad tag,
/// short input, or trailing bytes.
Frame decode_frame(ByteView wire);

/// Incremental decoder for stream transports.
class FrameDecoder {
 public:
  void feed(ByteView chunk);
  std::optional<Frame> next();

 private:
  Bytes buffer_;
  std::size_t offset_ = 0;
};

// ---------------------------------------------------------------------------
// Addresses: `sim://<node>:<port>` or `<host>:<port>`.

struct Address {
  bool simulated = false;
  std::string host;
  std::uint16_t port = 0;

  static Address parse(std::string_view text);
  static Address sim(std::string node, std::uint16_t port) { return {true, std::move(node), port}; }
  static Address tcp(std::string host, std::uint16_t port) { return {false, std::move(host), port}; }
  std::string to_string() const;

  friend bool operator==(const Address&, const Address&) = default;
};

using Millis = std::chrono::milliseconds;

// ---------------------------------------------------------------------------
// Abstract Transport: reliable, ordered, message-oriented duplex channel.
//
// A channel has one owner at a time but the send and receive halves may be
// driven from two threads concurrently.

class Channel {
 public:
  virtual ~Channel() = default;

  virtual void send(const Frame& f) = 0;
  /// Blocks until a frame is available; Error(ChannelClosed) once the peer
  /// has closed and every queued frame has been consumed.
  virtual Frame recv() = 0;
  /// As recv(), but throws Error(Timeout) after `timeout`.
  virtual Frame recv_for(Millis timeout) = 0;
  /// Idempotent.
  virtual void close() = 0;
  virtual bool is_open() const = 0;

  virtual Address local_address() const = 0;
  virtual Address peer_address() const = 0;
  /// Transport-level connection id (simulated network only; 0 elsewhere).
  virtual std::uint64_t connection_id() const { return 0; }
};

class Acceptor {
 public:
  virtual ~Acceptor() = default;

  virtual std::unique_ptr<Channel> accept() = 0;
  virtual std::unique_ptr<Channel> accept_for(Millis timeout) = 0;
  /// Idempotent; pending connections are reset.
  virtual void close() = 0;
  virtual bool is_open() const = 0;
  virtual Address address() const = 0;
};

/// A network handle scoped to one host: listen binds on that host and
/// connect originates from it.
class Network {
 public:
  virtual ~Network() = default;

  /// Port 0 requests a free port; Error(AddressInUse) if already bound.
  virtual std::unique_ptr<Acceptor> listen(const Address& addr) = 0;
  /// Error(ConnectionRefused) when nothing listens at `addr`, Error(Timeout)
  /// when the transport gives up.
  virtual std::unique_ptr<Channel> connect(const Address& addr) = 0;
  /// Address form used to tell peers where this host listens.
  virtual Address local(std::uint16_t port) const = 0;
};

}  // namespace sessec
