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

#include "sessec/srp.hpp"

#include <fstream>
#include <sstream>

#include "sessec/error.hpp"

namespace sessec {

namespace {

constexpr char kN1024[] =
    "EEAF0AB9ADB38DD69C33F80AFA8FC5E86072618775FF3C0B9EA2314C9C256576D674DF7496EA81D3383B4813D692C6E0E0D5D8E250B98BE4"
    "8E495C1D6089DAD15DC7D7B46154D6B6CE8EF4AD69B15D4982559B297BCF1885C529F566660E57EC68EDBC3C05726CC02FD4CBF4976EAA9A"
    "FD5138FE8376435B9FC61D2FC0EB06E3";

constexpr char kN2048[] =
    "AC6BDB41324A9A9BF166DE5E1389582FAF72B6651987EE07FC3192943DB56050A37329CBB4A099ED8193E0757767A13DD52312AB4B03310D"
    "CD7F48A9DA04FD50E8083969EDB767B0CF6095179A163AB3661A05FBD5FAAAE82918A9962F0B93B855F97993EC975EEAA80D740ADBF4FF74"
    "7359D041D5C33EA71D281E446B14773BCA97B43A23FB801676BD207A436C6481F1D2B9078717461A5B9D32E688F87748544523B524B0D57D"
    "5EA77A2775D2ECFA032CFBDBF52FB3786160279004E57AE6AF874E7303CE53299CCC041C7BC308D82A5698F3A8D0C38271AE35F8E9DBFBB6"
    "94B5C803D89F7AE435DE236D525F54759B65E372FCD68EF20FA7111F9E4AFF73";

constexpr std::size_t kSaltSize = 16;
constexpr std::size_t kEphemeralSize = 32;

Frame handshake_frame(SrpMsg msg, ByteWriter body) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(msg));
  w.raw(body.bytes());
  return Frame{FrameTag::Data, std::move(w).take()};
}

/// Receives the next handshake frame and checks its sub-tag; returns a reader past it.
Bytes expect_msg(Channel& ch, SrpMsg msg, Millis timeout) {
  Frame f = ch.recv_for(timeout);
  if (f.tag != FrameTag::Data || f.payload.empty() || f.payload[0] != static_cast<std::uint8_t>(msg))
    throw Error(Errc::AuthFailed, "unexpected handshake message");
  return Bytes(f.payload.begin() + 1, f.payload.end());
}

Bytes derive(ByteView key, std::string_view label) { return hmac_sha256(key, to_bytes(label)); }

BigNum fresh_ephemeral(const SrpOptions& opts) {
  return opts.ephemeral ? *opts.ephemeral : BigNum::from_bytes(random_bytes(kEphemeralSize));
}

}  // namespace

const SrpGroup& SrpGroup::rfc5054_1024() {
  static const SrpGroup g{"rfc5054-1024", BigNum::from_hex(kN1024), BigNum::from_word(2)};
  return g;
}

const SrpGroup& SrpGroup::rfc5054_2048() {
  static const SrpGroup g{"rfc5054-2048", BigNum::from_hex(kN2048), BigNum::from_word(2)};
  return g;
}

const SrpGroup& SrpGroup::by_name(std::string_view name) {
  if (name == rfc5054_1024().name) return rfc5054_1024();
  if (name == rfc5054_2048().name) return rfc5054_2048();
  throw Error(Errc::InvalidArgument, "unknown SRP group '" + std::string(name) + "'");
}

BigNum srp_k(const SrpGroup& grp, HashAlgo h) {
  return BigNum::from_bytes(Hasher(h).update(grp.N.to_bytes()).update(grp.g.to_bytes(grp.width())).finish());
}

BigNum srp_x(HashAlgo h, ByteView salt, std::string_view username, std::string_view password) {
  Bytes inner = Hasher(h).update(username).update(":").update(password).finish();
  return BigNum::from_bytes(Hasher(h).update(salt).update(inner).finish());
}

BigNum srp_A(const SrpGroup& grp, const BigNum& a) { return grp.g.mod_exp(a, grp.N); }

BigNum srp_B(const SrpGroup& grp, HashAlgo h, const BigNum& v, const BigNum& b) {
  return srp_k(grp, h).mod_mul(v, grp.N).mod_add(grp.g.mod_exp(b, grp.N), grp.N);
}

BigNum srp_u(const SrpGroup& grp, HashAlgo h, const BigNum& A, const BigNum& B) {
  return BigNum::from_bytes(Hasher(h).update(A.to_bytes(grp.width())).update(B.to_bytes(grp.width())).finish());
}

BigNum srp_client_S(const SrpGroup& grp, HashAlgo h, const BigNum& B, const BigNum& x, const BigNum& a,
                    const BigNum& u) {
  BigNum base = B.mod_sub(srp_k(grp, h).mod_mul(grp.g.mod_exp(x, grp.N), grp.N), grp.N);
  BigNum exp = a.add(u.mul(x));
  return base.mod_exp(exp, grp.N);
}

BigNum srp_server_S(const SrpGroup& grp, const BigNum& A, const BigNum& v, const BigNum& u, const BigNum& b) {
  return A.mod_mul(v.mod_exp(u, grp.N), grp.N).mod_exp(b, grp.N);
}

Bytes srp_K(const SrpGroup& grp, HashAlgo h, const BigNum& S) { return hash(h, S.to_bytes(grp.width())); }

Bytes srp_M1(const SrpGroup& grp, HashAlgo h, const BigNum& A, const BigNum& B, ByteView K) {
  return Hasher(h).update(A.to_bytes(grp.width())).update(B.to_bytes(grp.width())).update(K).finish();
}

Bytes srp_M2(const SrpGroup& grp, HashAlgo h, const BigNum& A, ByteView M1, ByteView K) {
  return Hasher(h).update(A.to_bytes(grp.width())).update(M1).update(K).finish();
}

VerifierRecord register_user(const SrpGroup& grp, std::string_view username, std::string_view password, HashAlgo h,
                             std::optional<Bytes> salt) {
  if (username.empty() || password.empty()) throw Error(Errc::InvalidArgument, "username and password must be non-empty");
  if (username.find(':') != std::string_view::npos) throw Error(Errc::InvalidArgument, "username may not contain ':'");
  Bytes s = salt ? std::move(*salt) : random_bytes(kSaltSize);
  BigNum v = grp.g.mod_exp(srp_x(h, s, username, password), grp.N);
  return VerifierRecord{std::string(username), std::move(s), std::move(v), grp.name};
}

// --- Registry ---

Registry::Registry() : decoy_seed_(random_bytes(32)) {}

void Registry::add(VerifierRecord rec) {
  auto name = rec.username;
  records_.insert_or_assign(std::move(name), std::move(rec));
}

const VerifierRecord* Registry::find(std::string_view username) const {
  auto it = records_.find(username);
  return it == records_.end() ? nullptr : &it->second;
}

Registry Registry::parse(std::string_view text) {
  Registry reg;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::istringstream ls(line);
    for (std::string f; std::getline(ls, f, ':');) fields.push_back(f);
    if (fields.size() != 4 || fields[0].empty())
      throw Error(Errc::InvalidArgument, "registry line " + std::to_string(lineno) + ": expected 4 ':'-separated fields");
    SrpGroup::by_name(fields[3]);
    VerifierRecord rec{fields[0], from_hex(fields[1]), BigNum::from_hex(fields[2]), fields[3]};
    if (rec.verifier.is_zero()) throw Error(Errc::InvalidArgument, "registry line " + std::to_string(lineno) + ": zero verifier");
    reg.add(std::move(rec));
  }
  return reg;
}

Registry Registry::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::InvalidArgument, "cannot read registry " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string Registry::render() const {
  std::string out;
  for (const auto& [name, rec] : records_)
    out += name + ":" + to_hex(rec.salt) + ":" + rec.verifier.to_hex() + ":" + rec.group + "\n";
  return out;
}

void Registry::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error(Errc::InvalidArgument, "cannot write registry " + path);
  out << render();
}

// --- SecureChannel ---

SecureChannel::SecureChannel(std::unique_ptr<Channel> inner, ByteView session_key, Role role,
                             std::string peer_identity)
    : inner_(std::move(inner)), key_(session_key.begin(), session_key.end()), peer_identity_(std::move(peer_identity)) {
  Keys c2s{derive(key_, "sessec client->server enc"), derive(key_, "sessec client->server mac")};
  Keys s2c{derive(key_, "sessec server->client enc"), derive(key_, "sessec server->client mac")};
  out_ = role == Role::Client ? c2s : s2c;
  in_ = role == Role::Client ? s2c : c2s;
}

namespace {

Bytes counter_iv(std::uint64_t counter) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(counter >> 32));
  w.u32(static_cast<std::uint32_t>(counter));
  w.u32(0);
  w.u32(0);
  return std::move(w).take();
}

Bytes mac_input(std::uint64_t counter, FrameTag tag, ByteView ciphertext) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(counter >> 32));
  w.u32(static_cast<std::uint32_t>(counter));
  w.u8(static_cast<std::uint8_t>(tag));
  w.raw(ciphertext);
  return std::move(w).take();
}

}  // namespace

void SecureChannel::send(const Frame& f) {
  if (f.payload.size() + kMacSize > kMaxFramePayload)
    throw Error(Errc::FrameTooLarge, std::to_string(f.payload.size()) + " byte payload");
  std::lock_guard lk(send_mutex_);
  Bytes sealed = aes256_ctr(out_.enc, counter_iv(send_counter_), f.payload);
  Bytes tag = hmac_sha256(out_.mac, mac_input(send_counter_, f.tag, sealed));
  sealed.insert(sealed.end(), tag.begin(), tag.end());
  inner_->send(Frame{f.tag, std::move(sealed)});
  ++send_counter_;
}

Frame SecureChannel::recv() {
  std::lock_guard lk(recv_mutex_);
  return open(inner_->recv());
}

Frame SecureChannel::recv_for(Millis timeout) {
  std::lock_guard lk(recv_mutex_);
  return open(inner_->recv_for(timeout));
}

Frame SecureChannel::open(const Frame& sealed) {
  if (sealed.payload.size() < kMacSize) {
    inner_->close();
    throw Error(Errc::IntegrityFailure, "sealed frame shorter than its MAC");
  }
  ByteView body(sealed.payload.data(), sealed.payload.size() - kMacSize);
  ByteView tag(sealed.payload.data() + body.size(), kMacSize);
  Bytes expect = hmac_sha256(in_.mac, mac_input(recv_counter_, sealed.tag, body));
  if (!constant_time_equal(expect, tag)) {
    inner_->close();
    throw Error(Errc::IntegrityFailure, "frame authentication failed");
  }
  Frame plain{sealed.tag, aes256_ctr(in_.enc, counter_iv(recv_counter_), body)};
  ++recv_counter_;
  return plain;
}

// --- handshakes ---

std::unique_ptr<SecureChannel> client_handshake(std::unique_ptr<Channel> ch, const SrpGroup& grp,
                                                std::string_view username, std::string_view password,
                                                const SrpOptions& opts) {
  try {
    ByteWriter hello;
    hello.str8(username);
    hello.str8(grp.name);
    ch->send(handshake_frame(SrpMsg::Hello, std::move(hello)));

    Bytes salt_b = expect_msg(*ch, SrpMsg::SaltB, opts.timeout);
    ByteReader r(salt_b);
    Bytes salt = r.blob16();
    BigNum B = BigNum::from_bytes(r.blob16());
    r.expect_done();
    if (B.mod(grp.N).is_zero()) throw Error(Errc::IllegalParameter, "server sent B = 0 mod N");

    BigNum a = fresh_ephemeral(opts);
    BigNum A = srp_A(grp, a);
    BigNum u = srp_u(grp, opts.hash, A, B);
    if (u.is_zero()) throw Error(Errc::IllegalParameter, "scrambling parameter u = 0");
    BigNum x = srp_x(opts.hash, salt, username, password);
    Bytes K = srp_K(grp, opts.hash, srp_client_S(grp, opts.hash, B, x, a, u));
    Bytes M1 = srp_M1(grp, opts.hash, A, B, K);

    ByteWriter amsg;
    amsg.blob16(A.to_bytes(grp.width()));
    ch->send(handshake_frame(SrpMsg::AMsg, std::move(amsg)));
    ByteWriter m1;
    m1.blob16(M1);
    ch->send(handshake_frame(SrpMsg::M1, std::move(m1)));

    Bytes m2_body;
    try {
      m2_body = expect_msg(*ch, SrpMsg::M2, opts.timeout);
    } catch (const Error& e) {
      if (e.code() == Errc::ChannelClosed) throw Error(Errc::AuthFailed, "server rejected client evidence");
      throw;
    }
    ByteReader r2(m2_body);
    Bytes M2 = r2.blob16();
    r2.expect_done();
    if (!constant_time_equal(M2, srp_M2(grp, opts.hash, A, M1, K)))
      throw Error(Errc::AuthFailed, "server evidence mismatch");
    return std::make_unique<SecureChannel>(std::move(ch), K, SecureChannel::Role::Client, "server");
  } catch (const Error& e) {
    ch->close();
    if (e.code() == Errc::MalformedFrame) throw Error(Errc::AuthFailed, e.what());
    throw;
  }
}

std::unique_ptr<SecureChannel> server_handshake(std::unique_ptr<Channel> ch, const Registry& registry,
                                                const SrpOptions& opts) {
  try {
    Bytes hello = expect_msg(*ch, SrpMsg::Hello, opts.timeout);
    ByteReader r(hello);
    std::string username = r.str8();
    std::string group_name = r.str8();
    r.expect_done();

    const VerifierRecord* rec = registry.find(username);
    VerifierRecord decoy;
    if (!rec) {
      const SrpGroup* grp = &SrpGroup::rfc5054_1024();
      if (group_name == SrpGroup::rfc5054_2048().name) grp = &SrpGroup::rfc5054_2048();
      Bytes seed(registry.decoy_seed().begin(), registry.decoy_seed().end());
      Bytes salt = hmac_sha256(seed, to_bytes("salt:" + username));
      salt.resize(kSaltSize);
      BigNum x = BigNum::from_bytes(hmac_sha256(seed, to_bytes("x:" + username)));
      decoy = VerifierRecord{username, std::move(salt), grp->g.mod_exp(x, grp->N), grp->name};
      rec = &decoy;
    }
    const SrpGroup& grp = SrpGroup::by_name(rec->group);

    BigNum b = fresh_ephemeral(opts);
    BigNum B = srp_B(grp, opts.hash, rec->verifier, b);
    ByteWriter sb;
    sb.blob16(rec->salt);
    sb.blob16(B.to_bytes(grp.width()));
    ch->send(handshake_frame(SrpMsg::SaltB, std::move(sb)));

    Bytes amsg = expect_msg(*ch, SrpMsg::AMsg, opts.timeout);
    ByteReader ra(amsg);
    BigNum A = BigNum::from_bytes(ra.blob16());
    ra.expect_done();
    if (A.mod(grp.N).is_zero()) throw Error(Errc::IllegalParameter, "client sent A = 0 mod N");
    BigNum u = srp_u(grp, opts.hash, A, B);
    if (u.is_zero()) throw Error(Errc::IllegalParameter, "scrambling parameter u = 0");
    Bytes K = srp_K(grp, opts.hash, srp_server_S(grp, A, rec->verifier, u, b));

    Bytes m1_body = expect_msg(*ch, SrpMsg::M1, opts.timeout);
    ByteReader rm(m1_body);
    Bytes M1 = rm.blob16();
    rm.expect_done();
    Bytes expect = srp_M1(grp, opts.hash, A, B, K);
    if (!constant_time_equal(M1, expect) || rec == &decoy) throw Error(Errc::AuthFailed, "client evidence mismatch");

    ByteWriter m2;
    m2.blob16(srp_M2(grp, opts.hash, A, M1, K));
    ch->send(handshake_frame(SrpMsg::M2, std::move(m2)));
    return std::make_unique<SecureChannel>(std::move(ch), K, SecureChannel::Role::Server, username);
  } catch (const Error& e) {
    ch->close();
    if (e.code() == Errc::MalformedFrame) throw Error(Errc::AuthFailed, e.what());
    throw;
  }
}

}  // namespace sessec
