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

#include "sessec/delegation.hpp"

#include "sessec/crypto.hpp"
#include "sessec/error.hpp"

namespace sessec {

namespace {

constexpr std::uint8_t kLmEnd = 0;
const std::string kSuccess = "Success";
const std::string kFail = "Fail";

/// Step label of the secure or the original protocol.
std::string step(bool secure, const char* secure_label, const char* original_label) {
  return secure ? secure_label : original_label;
}

Frame verdict_frame(const std::string& label) {
  ByteWriter w;
  w.u32(0);
  w.str8(label);
  return Frame{FrameTag::Branch, std::move(w).take()};
}

Frame lm_frame(std::uint32_t seq, const Frame& original) {
  ByteWriter w;
  w.u32(seq);
  w.u8(static_cast<std::uint8_t>(original.tag));
  w.raw(original.payload);
  return Frame{FrameTag::Lm, std::move(w).take()};
}

Frame lm_end(std::uint32_t sent, std::uint32_t consumed) {
  ByteWriter w;
  w.u32(sent);
  w.u8(kLmEnd);
  w.u32(consumed);
  return Frame{FrameTag::Lm, std::move(w).take()};
}

/// Monitor event a resent frame stands for, from the receiving side.
CommEvent replay_event(const Frame& f) {
  ByteReader r(f.payload);
  r.u32();
  switch (f.tag) {
    case FrameTag::Data:
      return CommEvent::received(MessageType::base(r.str8()));
    case FrameTag::Branch: {
      auto label = r.str8();
      r.expect_done();
      return CommEvent::offered(label);
    }
    case FrameTag::Iter: {
      auto again = r.u8();
      r.expect_done();
      return again ? CommEvent::iter_entered(Polarity::In) : CommEvent::iter_exited(Polarity::In);
    }
    default:
      throw Error(Errc::InconsistentTypes, std::string("resent ") + std::string(tag_name(f.tag)) + " frame");
  }
}

}  // namespace

Credential Credential::from(ByteView b) {
  if (b.size() != kSize) throw Error(Errc::MalformedFrame, "credential must be 32 bytes");
  Credential c;
  std::copy(b.begin(), b.end(), c.bytes.begin());
  return c;
}

Credential make_credential() { return Credential::from(random_bytes(Credential::kSize)); }

bool check_credential(const Credential& expected, const Credential& presented) {
  return constant_time_equal(expected.view(), presented.view());
}

Bytes DelegationSignal::encode() const {
  ByteWriter w;
  w.u32(progress);
  w.blob16(render_type(remaining_type));
  w.str8(receiver_host);
  w.u16(receiver_port);
  if (credential) w.raw(credential->view());
  return std::move(w).take();
}

DelegationSignal DelegationSignal::decode(ByteView payload) {
  ByteReader r(payload);
  DelegationSignal ds;
  ds.progress = r.u32();
  auto text = r.str16();
  try {
    ds.remaining_type = parse_type(text);
  } catch (const Error& e) {
    throw Error(Errc::MalformedFrame, std::string("delegation signal type: ") + e.what());
  }
  if (ds.remaining_type.contains_begin()) throw Error(Errc::MalformedFrame, "delegation signal type has a begin");
  ds.receiver_host = r.str8();
  ds.receiver_port = r.u16();
  if (!r.done()) ds.credential = Credential::from(r.raw(Credential::kSize));
  r.expect_done();
  return ds;
}

namespace {

/// Feeds `frames` to `remote` as input events; true when the result is `target`.
bool replays_to(SessionType remote, const std::deque<std::pair<std::uint32_t, Frame>>& frames,
                const SessionType& target) {
  try {
    for (const auto& [seq, f] : frames) {
      ByteReader r(f.payload);
      r.u32();
      switch (f.tag) {
        case FrameTag::Data:
          remote = advance(remote, CommEvent::received(MessageType::base(r.str8())));
          break;
        case FrameTag::Branch:
          remote = advance(remote, CommEvent::offered(r.str8()));
          break;
        case FrameTag::Iter:
          remote = advance(remote, r.u8() ? CommEvent::iter_entered(Polarity::In) : CommEvent::iter_exited(Polarity::In));
          break;
        default:
          return false;
      }
    }
  } catch (const Error&) {
    return false;
  }
  return remote == target;
}

}  // namespace

std::string_view status_name(DelegationStatus s) {
  switch (s) {
    case DelegationStatus::Completed: return "Completed";
    case DelegationStatus::CredentialRejected: return "CredentialRejected";
    case DelegationStatus::Aborted: return "Aborted";
  }
  return "?";
}

struct SessionInternals {
  static Channel& channel(Session& s) { return *s.channel_; }
  static void migrate(Session& s, const Frame& ds) { s.migrate(ds); }

  static void log(Session& s, const std::string& action, const std::string& step = {}, const std::string& detail = {}) {
    s.log(action, step, detail);
  }

  static void expect_delegating_send(Session& carrier, const Session& target) {
    carrier.require_active("delegate");
    const auto& head = carrier.remaining_;
    if (head.kind() != SessionType::Kind::Send || !head.message().is_session() ||
        head.message().delegated() != target.remaining_)
      carrier.abort_mismatch("carrier expects " + render_type(head) + ", cannot delegate " +
                             render_type(target.remaining_));
  }

  static DelegationOutcome aborted(std::string reason) {
    return DelegationOutcome{DelegationStatus::Aborted, std::move(reason), nullptr};
  }

  static DelegationOutcome delegate(Session& target, Session& carrier, bool secure) {
    expect_delegating_send(carrier, target);
    target.require_active("delegate");
    const Millis timeout = carrier.cfg_.timeout;

    std::optional<Credential> cred;
    if (secure) {
      cred = make_credential();
      if (carrier.cfg_.credential_observer) carrier.cfg_.credential_observer(cred->view());
      carrier.log("create credential", "1");
    }

    carrier.log(secure ? "send START_DELEGATION::CRED" : "send START_DELEGATION", step(secure, "2", "1"));
    Frame sd{FrameTag::StartDelegation, cred ? Bytes(cred->bytes.begin(), cred->bytes.end()) : Bytes{}};
    std::uint16_t port = 0;
    try {
      carrier.channel_->send(sd);
      carrier.remaining_ = advance(carrier.remaining_, CommEvent::sent(carrier.remaining_.message()));
      Frame pf = carrier.channel_->recv_for(timeout);
      if (pf.tag != FrameTag::Port) return aborted("expected PORT, got " + std::string(tag_name(pf.tag)));
      ByteReader r(pf.payload);
      port = r.u16();
      r.expect_done();
      carrier.log("recv PORT", {}, std::to_string(port));
    } catch (const Error& e) {
      return aborted(e.what());
    }

    DelegationSignal ds;
    ds.progress = target.consumed_;
    ds.remaining_type = target.remaining_;
    ds.receiver_host = carrier.channel_->peer_address().host;
    ds.receiver_port = port;
    ds.credential = cred;
    target.state_ = SessionState::Delegating;
    target.log("send DS", step(secure, "5", "4"), render_type(ds.remaining_type));
    try {
      target.channel_->send(Frame{FrameTag::Ds, ds.encode()});
      for (;;) {
        Frame f = target.channel_->recv_for(timeout);
        if (f.tag == FrameTag::DsAck) break;
        if (f.tag == FrameTag::Data || f.tag == FrameTag::Branch || f.tag == FrameTag::Iter) {
          target.log("discard " + std::string(tag_name(f.tag)), {}, "resent by the passive party");
          continue;
        }
        target.channel_->close();
        target.state_ = SessionState::Closed;
        return aborted("expected DSACK, got " + std::string(tag_name(f.tag)));
      }
    } catch (const Error& e) {
      target.channel_->close();
      target.state_ = SessionState::Closed;
      return aborted(std::string("waiting for DSACK: ") + e.what());
    }
    target.log("recv DSACK");
    target.log("close", step(secure, "7'", "6'"));
    target.channel_->close();
    target.state_ = SessionState::Closed;
    return DelegationOutcome{DelegationStatus::Completed, {}, nullptr};
  }

  static DelegationOutcome receive_delegation(Session& carrier, bool secure) {
    carrier.require_active("receive_delegation");
    const auto& head = carrier.remaining_;
    if (head.kind() != SessionType::Kind::Recv || !head.message().is_session())
      carrier.abort_mismatch("receive of a delegated session where remaining type is " + render_type(head));
    const SessionType delegated = head.message().delegated();
    const SessionConfig& cfg = carrier.cfg_;
    const Millis timeout = cfg.timeout;

    std::optional<Credential> expected;
    try {
      Frame sd = carrier.channel_->recv_for(timeout);
      if (sd.tag != FrameTag::StartDelegation)
        carrier.abort_mismatch("expected START_DELEGATION, got " + std::string(tag_name(sd.tag)));
      if (secure) {
        if (sd.payload.size() != Credential::kSize) carrier.abort_mismatch("START_DELEGATION without credential");
        expected = Credential::from(sd.payload);
      }
      carrier.log(secure ? "recv START_DELEGATION::CRED" : "recv START_DELEGATION");
      carrier.remaining_ = advance(carrier.remaining_, CommEvent::received(head.message()));
    } catch (const Error& e) {
      if (e.code() == Errc::TypeMismatch) throw;
      return aborted(e.what());
    }

    std::unique_ptr<Acceptor> acceptor;
    std::unique_ptr<Channel> ch;
    try {
      acceptor = cfg.network->listen(cfg.network->local(0));
      const auto port = acceptor->address().port;
      carrier.log("open port", step(secure, "3", "2"), std::to_string(port));
      ByteWriter w;
      w.u16(port);
      carrier.log("send PORT", step(secure, "4", "3"), std::to_string(port));
      carrier.channel_->send(Frame{FrameTag::Port, std::move(w).take()});
      ch = acceptor->accept_for(timeout);
    } catch (const Error& e) {
      if (acceptor) acceptor->close();
      return aborted(e.what());
    }

    SessionConfig mcfg = cfg;
    mcfg.channel = "x";
    auto mlog = [&](const std::string& action, const std::string& st = {}, const std::string& detail = {}) {
      if (mcfg.transcript) mcfg.transcript->record(mcfg.role, action, mcfg.channel, st, detail);
    };

    try {
      if (cfg.srp_registry) ch = server_handshake(std::move(ch), *cfg.srp_registry, cfg.srp);
    } catch (const Error& e) {
      mlog("close port", step(secure, "9b'", ""), e.what());
      acceptor->close();
      return DelegationOutcome{DelegationStatus::CredentialRejected, std::string("authentication failed: ") + e.what(),
                               nullptr};
    }

    if (secure) {
      std::optional<Credential> presented;
      try {
        Frame cf = ch->recv_for(timeout);
        if (cf.tag == FrameTag::Cred) presented = Credential::from(cf.payload);
      } catch (const Error& e) {
        if (e.code() != Errc::MalformedFrame) {
          ch->close();
          acceptor->close();
          return aborted(std::string("waiting for CRED: ") + e.what());
        }
      }
      mlog("check CRED", "9'");
      if (cfg.credential_observer && presented) cfg.credential_observer(presented->view());
      if (!presented || !check_credential(*expected, *presented)) {
        mlog("reject, close port", "9b'");
        try {
          ch->send(verdict_frame(kFail));
        } catch (const Error&) {
        }
        ch->close();
        acceptor->close();
        return DelegationOutcome{DelegationStatus::CredentialRejected, "credential rejected", nullptr};
      }
      mlog("connection established", "9a'");
      try {
        ch->send(verdict_frame(kSuccess));
      } catch (const Error& e) {
        acceptor->close();
        return aborted(e.what());
      }
    }
    acceptor->close();

    std::vector<Frame> resent;
    std::uint32_t peer_sent = 0;
    std::uint32_t peer_consumed = 0;
    try {
      for (;;) {
        Frame f = ch->recv_for(timeout);
        if (f.tag != FrameTag::Lm) throw Error(Errc::InconsistentTypes, "expected LM, got " + std::string(tag_name(f.tag)));
        ByteReader r(f.payload);
        auto seq = r.u32();
        auto tag = r.u8();
        if (tag == kLmEnd) {
          peer_sent = seq;
          peer_consumed = r.u32();
          r.expect_done();
          break;
        }
        if (!is_valid_tag(tag)) throw Error(Errc::InconsistentTypes, "resent frame with bad tag");
        auto rest = r.rest();
        resent.push_back(Frame{static_cast<FrameTag>(tag), Bytes(rest.begin(), rest.end())});
      }
      if (resent.size() > peer_sent) throw Error(Errc::InconsistentTypes, "more resent frames than frames sent");
      SessionType scratch = delegated;
      for (const auto& f : resent) {
        try {
          scratch = advance(scratch, replay_event(f));
        } catch (const Error& e) {
          throw Error(Errc::InconsistentTypes, std::string("resent frames violate ") + render_type(delegated) + ": " + e.what());
        }
      }
    } catch (const Error& e) {
      ch->close();
      if (e.code() == Errc::InconsistentTypes) throw;
      return aborted(std::string("receiving lost messages: ") + e.what());
    }
    mlog("recv LM", {}, std::to_string(resent.size()) + " frame(s)");

    auto migrated = std::make_unique<Session>(std::move(ch), delegated, SessionRole::Acceptor, std::move(mcfg));
    migrated->consumed_ = peer_sent - static_cast<std::uint32_t>(resent.size());
    migrated->next_seq_ = peer_consumed;
    for (auto& f : resent) migrated->inbox_.push_back(std::move(f));
    return DelegationOutcome{DelegationStatus::Completed, {}, std::move(migrated)};
  }
};

void Session::migrate(const Frame& ds_frame) {
  const bool secure = cfg_.secure_delegation;
  state_ = SessionState::Delegating;
  DelegationSignal ds;
  try {
    ds = DelegationSignal::decode(ds_frame.payload);
  } catch (const Error& e) {
    abort_mismatch(std::string("malformed delegation signal: ") + e.what());
  }
  log("recv DS", {}, render_type(ds.remaining_type));
  if (secure && !ds.credential) {
    state_ = SessionState::Closed;
    channel_->close();
    throw Error(Errc::DelegationRefused, "delegation signal carries no credential");
  }

  log("send DSACK", step(secure, "6", "5"));
  try {
    channel_->send(Frame{FrameTag::DsAck, {}});
  } catch (const Error&) {
    // The sender gave up; reconnecting is still the only way forward.
  }
  log("close", step(secure, "7", "6"));
  channel_->close();

  while (!sent_unacked_.empty() && sent_unacked_.front().first < ds.progress) sent_unacked_.pop_front();
  // The shortest input bridge can undercount when a loop body holds only
  // outputs, so the unacknowledged frames themselves are replayed.
  if (!replays_to(ds.remaining_type, sent_unacked_, dual(remaining_))) {
    state_ = SessionState::Closed;
    std::string by_type = "none";
    try {
      by_type = std::to_string(lost_message_count(remaining_, ds.remaining_type));
    } catch (const Error&) {
    }
    throw Error(Errc::InconsistentTypes, std::to_string(sent_unacked_.size()) +
                                             " unacknowledged frames do not bridge the types (shortest bridge: " +
                                             by_type + ")");
  }

  Address target = cfg_.network->local(ds.receiver_port);
  target.host = ds.receiver_host;
  std::unique_ptr<Channel> ch;
  cfg_.channel = "x";
  try {
    ch = cfg_.network->connect(target);
    log("connect", step(secure, "8", "7"), target.to_string());
    if (cfg_.srp_identity) {
      const auto& id = *cfg_.srp_identity;
      ch = client_handshake(std::move(ch), SrpGroup::by_name(id.group), id.username, id.password, cfg_.srp);
    }
  } catch (const Error&) {
    state_ = SessionState::Closed;
    throw;
  }

  if (secure) {
    log("send CRED", "9");
    if (cfg_.credential_observer) cfg_.credential_observer(ds.credential->view());
    std::string verdict;
    try {
      ch->send(Frame{FrameTag::Cred, Bytes(ds.credential->bytes.begin(), ds.credential->bytes.end())});
      Frame v = ch->recv_for(cfg_.timeout);
      if (v.tag == FrameTag::Branch) {
        ByteReader r(v.payload);
        r.u32();
        verdict = r.str8();
      }
    } catch (const Error& e) {
      if (e.code() == Errc::Timeout) {
        ch->close();
        state_ = SessionState::Closed;
        throw;
      }
    }
    if (verdict != kSuccess) {
      log("credential rejected", "9b");
      ch->close();
      state_ = SessionState::Closed;
      throw Error(Errc::DelegationRefused, "session-receiver rejected the credential");
    }
    log("connection successful", "9a");
  }

  log("send LM", step(secure, "10", "8"), std::to_string(sent_unacked_.size()) + " frame(s)");
  try {
    for (const auto& [seq, f] : sent_unacked_) ch->send(lm_frame(seq, f));
    ch->send(lm_end(next_seq_, consumed_));
  } catch (const Error&) {
    state_ = SessionState::Closed;
    throw;
  }
  channel_ = std::move(ch);
  state_ = SessionState::Active;
}

DelegationOutcome delegate(Session& target, Session& carrier, bool secure) {
  return SessionInternals::delegate(target, carrier, secure);
}

DelegationOutcome receive_delegation(Session& carrier, bool secure) {
  return SessionInternals::receive_delegation(carrier, secure);
}

void handle_delegation_signal(Session& target) {
  Frame f = SessionInternals::channel(target).recv_for(target.config().timeout);
  if (f.tag != FrameTag::Ds) throw Error(Errc::TypeMismatch, "expected DS, got " + std::string(tag_name(f.tag)));
  SessionInternals::migrate(target, f);
}

}  // namespace sessec
