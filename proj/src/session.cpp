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

#include "sessec/session.hpp"

#include "sessec/error.hpp"

namespace sessec {

namespace {

void send_type(Channel& ch, const SessionType& t) {
  ByteWriter w;
  w.blob16(render_type(t));
  ch.send(Frame{FrameTag::Data, std::move(w).take()});
}

/// Exchanges rendered types; both sides send first, so neither blocks the other.
void check_peer_type(Channel& ch, const SessionType& t, Millis timeout) {
  send_type(ch, t);
  Frame f = ch.recv_for(timeout);
  SessionType peer;
  try {
    if (f.tag != FrameTag::Data) throw Error(Errc::MalformedFrame, "expected a protocol announcement");
    ByteReader r(f.payload);
    peer = parse_type(r.str16());
    r.expect_done();
  } catch (const Error& e) {
    ch.close();
    throw Error(Errc::NonDualPeer, std::string("unreadable peer protocol: ") + e.what());
  }
  if (!is_dual(t, peer)) {
    ch.close();
    throw Error(Errc::NonDualPeer, "local " + render_type(t) + " is not dual to peer " + render_type(peer));
  }
}

std::uint32_t read_progress(ByteReader& r) { return r.u32(); }

}  // namespace

Bytes encode_data(std::uint32_t progress, const TypedValue& v) {
  ByteWriter w;
  w.u32(progress);
  w.str8(v.type_name);
  w.raw(v.bytes);
  return std::move(w).take();
}

Session::Session(std::unique_ptr<Channel> channel, SessionType local_remaining, SessionRole role, SessionConfig cfg)
    : channel_(std::move(channel)), remaining_(std::move(local_remaining)), role_(role), cfg_(std::move(cfg)) {}

Session::~Session() {
  if (channel_) channel_->close();
}

std::string Session::peer_identity() const {
  if (auto* sc = dynamic_cast<const SecureChannel*>(channel_.get())) return sc->peer_identity();
  return {};
}

void Session::log(const std::string& action, const std::string& step, const std::string& detail) {
  if (cfg_.transcript) cfg_.transcript->record(cfg_.role, action, cfg_.channel, step, detail);
}

void Session::require_active(const char* op) const {
  if (state_ != SessionState::Active)
    throw Error(Errc::InvalidState, std::string(op) + " on a session that is not active");
}

void Session::abort_mismatch(const std::string& what) {
  state_ = SessionState::Closed;
  channel_->close();
  log("abort", {}, what);
  throw Error(Errc::TypeMismatch, what);
}

void Session::advance_or_abort(const CommEvent& e) {
  try {
    remaining_ = advance(remaining_, e);
  } catch (const Error& err) {
    if (err.code() != Errc::TypeMismatch) throw;
    abort_mismatch(err.what());
  }
}

void Session::send_session_frame(FrameTag tag, ByteWriter body) {
  ByteWriter w;
  w.u32(consumed_);
  w.raw(body.bytes());
  Frame f{tag, std::move(w).take()};
  sent_unacked_.emplace_back(next_seq_++, f);
  try {
    channel_->send(f);
  } catch (const Error& e) {
    if (e.code() == Errc::ChannelClosed) state_ = SessionState::Closed;
    throw;
  }
}

Frame Session::next_session_frame() {
  for (;;) {
    Frame f;
    if (!inbox_.empty()) {
      f = std::move(inbox_.front());
      inbox_.pop_front();
    } else {
      try {
        f = channel_->recv_for(cfg_.timeout);
      } catch (const Error& e) {
        if (e.code() == Errc::ChannelClosed || e.code() == Errc::IntegrityFailure) state_ = SessionState::Closed;
        throw;
      }
    }
    switch (f.tag) {
      case FrameTag::Ds:
        migrate(f);
        continue;
      case FrameTag::Close:
        state_ = SessionState::Closed;
        channel_->close();
        throw Error(Errc::ChannelClosed, "peer closed the session");
      case FrameTag::Data:
      case FrameTag::Branch:
      case FrameTag::Iter: {
        std::uint32_t progress = 0;
        try {
          ByteReader r(f.payload);
          progress = read_progress(r);
        } catch (const Error&) {
          abort_mismatch(std::string("truncated ") + std::string(tag_name(f.tag)) + " frame");
        }
        while (!sent_unacked_.empty() && sent_unacked_.front().first < progress) sent_unacked_.pop_front();
        ++consumed_;
        f.payload.erase(f.payload.begin(), f.payload.begin() + 4);
        return f;
      }
      default:
        abort_mismatch(std::string("unexpected ") + std::string(tag_name(f.tag)) + " frame");
    }
  }
}

void Session::send_value(const TypedValue& v) {
  require_active("send_value");
  if (remaining_.kind() != SessionType::Kind::Send)
    abort_mismatch("send of " + v.type_name + " where remaining type is " + render_type(remaining_));
  if (remaining_.message().is_session())
    abort_mismatch("send of " + v.type_name + " where a session is to be delegated");
  advance_or_abort(CommEvent::sent(MessageType::base(v.type_name)));
  log("send " + v.type_name);
  ByteWriter w;
  w.str8(v.type_name);
  w.raw(v.bytes);
  send_session_frame(FrameTag::Data, std::move(w));
}

TypedValue Session::recv_value() {
  require_active("recv_value");
  if (remaining_.kind() != SessionType::Kind::Recv || remaining_.message().is_session())
    abort_mismatch("receive where remaining type is " + render_type(remaining_));
  Frame f = next_session_frame();
  if (f.tag != FrameTag::Data) abort_mismatch(std::string("expected DATA, got ") + std::string(tag_name(f.tag)));
  TypedValue v;
  try {
    ByteReader r(f.payload);
    v.type_name = r.str8();
    auto rest = r.rest();
    v.bytes.assign(rest.begin(), rest.end());
  } catch (const Error&) {
    abort_mismatch("truncated DATA frame");
  }
  if (v.type_name != remaining_.message().name())
    abort_mismatch("received " + v.type_name + " where " + remaining_.message().name() + " was expected");
  advance_or_abort(CommEvent::received(MessageType::base(v.type_name)));
  log("recv " + v.type_name);
  return v;
}

void Session::select_label(const std::string& label) {
  require_active("select_label");
  if (remaining_.kind() != SessionType::Kind::Select)
    abort_mismatch("select where remaining type is " + render_type(remaining_));
  if (!remaining_.branch(label)) throw Error(Errc::UnknownLabel, "no branch '" + label + "' in " + render_type(remaining_));
  advance_or_abort(CommEvent::selected(label));
  log("select " + label);
  ByteWriter w;
  w.str8(label);
  send_session_frame(FrameTag::Branch, std::move(w));
}

std::string Session::offer_labels() {
  require_active("offer_labels");
  if (remaining_.kind() != SessionType::Kind::Offer)
    abort_mismatch("offer where remaining type is " + render_type(remaining_));
  Frame f = next_session_frame();
  if (f.tag != FrameTag::Branch) abort_mismatch(std::string("expected BRANCH, got ") + std::string(tag_name(f.tag)));
  std::string label;
  try {
    ByteReader r(f.payload);
    label = r.str8();
    r.expect_done();
  } catch (const Error&) {
    abort_mismatch("malformed BRANCH frame");
  }
  if (!remaining_.branch(label)) abort_mismatch("peer selected unknown label '" + label + "'");
  advance_or_abort(CommEvent::offered(label));
  log("offer " + label);
  return label;
}

void Session::iter_continue(bool again) {
  require_active("iter_continue");
  if (remaining_.kind() != SessionType::Kind::OutIter)
    abort_mismatch("iteration control where remaining type is " + render_type(remaining_));
  advance_or_abort(again ? CommEvent::iter_entered(Polarity::Out) : CommEvent::iter_exited(Polarity::Out));
  log(again ? "iter continue" : "iter exit");
  ByteWriter w;
  w.u8(again ? 1 : 0);
  send_session_frame(FrameTag::Iter, std::move(w));
}

bool Session::iter_follow() {
  require_active("iter_follow");
  if (remaining_.kind() != SessionType::Kind::InIter)
    abort_mismatch("iteration follow where remaining type is " + render_type(remaining_));
  Frame f = next_session_frame();
  if (f.tag != FrameTag::Iter) abort_mismatch(std::string("expected ITER, got ") + std::string(tag_name(f.tag)));
  if (f.payload.size() != 1 || f.payload[0] > 1) abort_mismatch("malformed ITER frame");
  bool again = f.payload[0] == 1;
  advance_or_abort(again ? CommEvent::iter_entered(Polarity::In) : CommEvent::iter_exited(Polarity::In));
  log(again ? "iter follow continue" : "iter follow exit");
  return again;
}

void Session::close() {
  if (state_ == SessionState::Closed) return;
  bool at_end = remaining_.is_end();
  log("close");
  if (channel_->is_open()) {
    try {
      channel_->send(Frame{FrameTag::Close, {}});
    } catch (const Error&) {
      // Peer already gone; the close still completes locally.
    }
  }
  channel_->close();
  state_ = SessionState::Closed;
  if (!at_end) throw Error(Errc::PrematureClose, "closed with remaining type " + render_type(remaining_));
}

std::unique_ptr<Session> request_session(Network& net, const Address& addr, const SessionType& t, SessionConfig cfg) {
  if (t.kind() != SessionType::Kind::Begin || t.side() != Side::Client)
    throw Error(Errc::InvalidArgument, "request_session needs a cbegin protocol");
  std::unique_ptr<Channel> ch = net.connect(addr);
  if (cfg.srp_identity) {
    const auto& id = *cfg.srp_identity;
    ch = client_handshake(std::move(ch), SrpGroup::by_name(id.group), id.username, id.password, cfg.srp);
  }
  check_peer_type(*ch, t, cfg.timeout);
  if (cfg.transcript) cfg.transcript->record(cfg.role, "request", cfg.channel);
  return std::make_unique<Session>(std::move(ch), t.body(), SessionRole::Initiator, std::move(cfg));
}

std::unique_ptr<Session> accept_session(Acceptor& acceptor, const SessionType& t, SessionConfig cfg) {
  if (t.kind() != SessionType::Kind::Begin || t.side() != Side::Server)
    throw Error(Errc::InvalidArgument, "accept_session needs an sbegin protocol");
  std::unique_ptr<Channel> ch = acceptor.accept_for(cfg.timeout);
  if (cfg.srp_registry) ch = server_handshake(std::move(ch), *cfg.srp_registry, cfg.srp);
  check_peer_type(*ch, t, cfg.timeout);
  if (cfg.transcript) cfg.transcript->record(cfg.role, "accept", cfg.channel);
  return std::make_unique<Session>(std::move(ch), t.body(), SessionRole::Acceptor, std::move(cfg));
}

}  // namespace sessec
