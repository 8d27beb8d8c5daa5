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

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "sessec/crypto.hpp"
#include "sessec/transport.hpp"

// SRP-6a password-authenticated key exchange and the channel it keys.

namespace sessec {

struct SrpGroup {
  std::string name;
  BigNum N;
  BigNum g;

  /// Byte length of N; the width every padded value is encoded at.
  std::size_t width() const { return N.num_bytes(); }

  static const SrpGroup& rfc5054_1024();
  static const SrpGroup& rfc5054_2048();
  /// Error(InvalidArgument) for an unknown name.
  static const SrpGroup& by_name(std::string_view name);
};

struct VerifierRecord {
  std::string username;
  Bytes salt;
  BigNum verifier;
  std::string group;
};

// SRP-6a arithmetic. PAD(x) left-pads to the width of N.
BigNum srp_k(const SrpGroup& grp, HashAlgo h);
BigNum srp_x(HashAlgo h, ByteView salt, std::string_view username, std::string_view password);
BigNum srp_A(const SrpGroup& grp, const BigNum& a);
BigNum srp_B(const SrpGroup& grp, HashAlgo h, const BigNum& v, const BigNum& b);
BigNum srp_u(const SrpGroup& grp, HashAlgo h, const BigNum& A, const BigNum& B);
/// S = (B - k*g^x) ^ (a + u*x) mod N
BigNum srp_client_S(const SrpGroup& grp, HashAlgo h, const BigNum& B, const BigNum& x, const BigNum& a,
                    const BigNum& u);
/// S = (A * v^u) ^ b mod N
BigNum srp_server_S(const SrpGroup& grp, const BigNum& A, const BigNum& v, const BigNum& u, const BigNum& b);
Bytes srp_K(const SrpGroup& grp, HashAlgo h, const BigNum& S);
Bytes srp_M1(const SrpGroup& grp, HashAlgo h, const BigNum& A, const BigNum& B, ByteView K);
Bytes srp_M2(const SrpGroup& grp, HashAlgo h, const BigNum& A, ByteView M1, ByteView K);

/// Creates a verifier record with a fresh 16-byte salt (or `salt` when given).
/// Error(InvalidArgument) on an empty username or password, or a ':' in the username.
VerifierRecord register_user(const SrpGroup& grp, std::string_view username, std::string_view password,
                             HashAlgo h = HashAlgo::Sha256, std::optional<Bytes> salt = std::nullopt);

/// Username -> verifier table. File format, one record per line:
///   username:salt_hex:verifier_hex:group_name
/// Blank lines and lines starting with '#' are ignored.
class Registry {
 public:
  Registry();

  void add(VerifierRecord rec);
  const VerifierRecord* find(std::string_view username) const;
  std::size_t size() const { return records_.size(); }

  static Registry parse(std::string_view text);
  static Registry load(const std::string& path);
  std::string render() const;
  void save(const std::string& path) const;

  /// Stable per-registry secret used to fake records for unknown users.
  ByteView decoy_seed() const { return decoy_seed_; }

 private:
  std::map<std::string, VerifierRecord, std::less<>> records_;
  Bytes decoy_seed_;
};

struct SrpOptions {
  HashAlgo hash = HashAlgo::Sha256;
  Millis timeout{5000};
  /// Fixed ephemeral secret (a on the client, b on the server); tests only.
  std::optional<BigNum> ephemeral;
};

/// Authenticated channel: the tag byte stays in the clear, the payload becomes
///   AES-256-CTR(payload) | HMAC-SHA256(counter | tag | ciphertext)
/// with independent keys and implicit 64-bit counters per direction. Any
/// verification failure closes the channel.
class SecureChannel final : public Channel {
 public:
  enum class Role { Client, Server };

  SecureChannel(std::unique_ptr<Channel> inner, ByteView session_key, Role role, std::string peer_identity);

  void send(const Frame& f) override;
  Frame recv() override;
  Frame recv_for(Millis timeout) override;
  void close() override { inner_->close(); }
  bool is_open() const override { return inner_->is_open(); }
  Address local_address() const override { return inner_->local_address(); }
  Address peer_address() const override { return inner_->peer_address(); }
  std::uint64_t connection_id() const override { return inner_->connection_id(); }

  const Bytes& session_key() const { return key_; }
  /// Username the peer authenticated as (server side), or the server's role name (client side).
  const std::string& peer_identity() const { return peer_identity_; }

  static constexpr std::size_t kMacSize = 32;

 private:
  struct Keys {
    Bytes enc;
    Bytes mac;
  };

  Frame open(const Frame& sealed);

  std::unique_ptr<Channel> inner_;
  Bytes key_;
  std::string peer_identity_;
  Keys out_;
  Keys in_;
  std::mutex send_mutex_;
  std::mutex recv_mutex_;
  std::uint64_t send_counter_ = 0;
  std::uint64_t recv_counter_ = 0;
};

/// Runs the client half of the handshake on `ch`. Errors: AuthFailed,
/// IllegalParameter, Timeout, transport errors. The channel is closed on failure.
std::unique_ptr<SecureChannel> client_handshake(std::unique_ptr<Channel> ch, const SrpGroup& grp,
                                                std::string_view username, std::string_view password,
                                                const SrpOptions& opts = {});

/// Runs the server half. Unknown users get a decoy verifier and fail only at the
/// evidence check.
std::unique_ptr<SecureChannel> server_handshake(std::unique_ptr<Channel> ch, const Registry& registry,
                                                const SrpOptions& opts = {});

/// Handshake sub-tags carried as the first byte of DATA frames.
enum class SrpMsg : std::uint8_t { Hello = 1, SaltB = 2, AMsg = 3, M1 = 4, M2 = 5 };

}  // namespace sessec
