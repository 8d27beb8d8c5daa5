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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <deque>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "sessec/conformance.hpp"
#include "sessec/error.hpp"
#include "sessec/model_checker.hpp"
#include "sessec/scenario.hpp"
#include "sessec/session_type.hpp"
#include "sessec/simnet.hpp"
#include "sessec/srp.hpp"
#include "support.hpp"

namespace sessec {
namespace {

using Clock = std::chrono::steady_clock;

// Time limits, seconds.
constexpr double kDualityLimit = 5.0;
constexpr double kAttackLimit = 10.0;
constexpr double kModelLimit = 60.0;
constexpr double kSrpLimit = 30.0;
constexpr std::size_t kStateLimit = 1'000'000;

constexpr int kRandomTypes = 1000;
constexpr int kAttackRuns = 100;
constexpr int kHandshakes = 200;
constexpr int kTrafficRuns = 1000;
constexpr int kFuzzFrames = 300;
constexpr std::size_t kMinWitnesses = 5;

struct Check {
  bool ok = true;
  std::string note;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) note = what;
    ok = ok && cond;
  }
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ScenarioOptions sim(bool secure, std::uint64_t seed) {
  ScenarioOptions o;
  o.secure = secure;
  o.seed = seed;
  return o;
}

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::InvalidState;
}

Check duality() {
  Check c;
  auto ps = parse_protocols(read_file(std::string(SESSEC_DATA_DIR) + "/purchase.sj"));
  auto get = [&](const std::string& n) {
    for (const auto& p : ps)
      if (p.name == n) return p.type;
    throw Error(Errc::InvalidArgument, "missing protocol " + n);
  };
  c.require(is_dual(get("customerToVendor"), get("vendorToCustomer")), "customerToVendor/vendorToCustomer");
  c.require(is_dual(get("vendorToHandler"), get("handlerToVendor")), "vendorToHandler/handlerToVendor");
  testing::Rng rng(1);
  for (int i = 0; i < kRandomTypes; ++i) {
    SessionType t = testing::random_type(rng, 6);
    c.require(dual(dual(t)) == t, "dual(dual(t)) != t for " + render_type(t));
    c.require(parse_type(render_type(t)) == t, "parse(render(t)) != t for " + render_type(t));
  }
  return c;
}

Check conformance() {
  Check c;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    for (bool secure : {true, false}) {
      auto r = run_purchase(sim(secure, seed), 2, true);
      c.require(r.outcome == RunOutcome::Completed, "demo did not complete");
      auto res = check_conformance(erase_to_steps(r.transcript->events()),
                                   secure ? secure_resending_order() : original_resending_order());
      c.require(res.ok, std::string(secure ? "secure" : "original") + " seed " + std::to_string(seed) + ": " +
                            (res.problems.empty() ? "" : res.problems.front()));
    }
  }
  return c;
}

Check attacks() {
  Check c;
  int infiltrated = 0, blocked = 0;
  for (int i = 0; i < kAttackRuns; ++i) {
    auto o = sim(false, 1 + static_cast<std::uint64_t>(i));
    o.attack = interception_attack(false, false);
    infiltrated += run_purchase(o, 1, true).outcome == RunOutcome::Infiltrated;
    auto s = sim(true, 1 + static_cast<std::uint64_t>(i));
    s.attack = interception_attack(true, false);
    blocked += run_purchase(s, 1, true).outcome == RunOutcome::Blocked;
  }
  c.note = "original INFILTRATED " + std::to_string(infiltrated) + "/" + std::to_string(kAttackRuns) +
           ", secure BLOCKED " + std::to_string(blocked) + "/" + std::to_string(kAttackRuns);
  c.ok = infiltrated == kAttackRuns && blocked == kAttackRuns;
  return c;
}

ModelParams params(ProtocolMode m, bool attacker, int k = 0, bool leak = false) {
  ModelParams p;
  p.mode = m;
  p.attacker = attacker;
  p.k = k;
  p.caps.leaked_credential = leak;
  p.bound = kStateLimit;
  return p;
}

Check model_verdicts() {
  Check c;
  std::size_t max_states = 0;
  {
    auto p = params(ProtocolMode::Original, true);
    Verdict v = ProtocolModel(p).check(Property::AttackerExclusion);
    c.require(!v.holds, "original: AttackerExclusion holds");
    c.require(v.witness_outcome == RunOutcome::Infiltrated, "original: witness outcome is not INFILTRATED");
    c.require(replay_witness(p, v).outcome == RunOutcome::Infiltrated, "original: witness replay differs");
    max_states = std::max(max_states, v.states);
  }
  for (int k = 0; k <= 2; ++k) {
    ProtocolModel m(params(ProtocolMode::Secure, true, k));
    for (Property p : all_properties()) {
      Verdict v = m.check(p);
      c.require(v.holds, "secure+attacker k=" + std::to_string(k) + ": " + std::string(property_name(p)) + " fails");
      max_states = std::max(max_states, v.states);
    }
    ProtocolModel h(params(ProtocolMode::Secure, false, k));
    for (Property p : {Property::Liveness, Property::Linearity, Property::Consistency}) {
      Verdict v = h.check(p);
      c.require(v.holds, "secure k=" + std::to_string(k) + ": " + std::string(property_name(p)) + " fails");
      max_states = std::max(max_states, v.states);
    }
  }
  c.require(max_states <= kStateLimit, "state space too large");
  if (c.ok) c.note = "largest state space " + std::to_string(max_states);
  return c;
}

Check witness_replay() {
  Check c;
  std::set<std::string> distinct;
  std::vector<ModelParams> configs{params(ProtocolMode::Original, true), params(ProtocolMode::Original, false),
                                   params(ProtocolMode::Original, true, 1), params(ProtocolMode::Original, true, 2),
                                   params(ProtocolMode::Secure, true, 0, true), params(ProtocolMode::Secure, true, 1, true)};
  std::size_t replays = 0;
  for (const auto& p : configs) {
    ProtocolModel m(p);
    for (Property prop : all_properties()) {
      Verdict v = m.check(prop);
      if (v.holds) continue;
      c.require(v.witness_outcome.has_value(), std::string(property_name(prop)) + ": witness outcome is ambiguous");
      if (!v.witness_outcome) continue;
      auto rep = replay_witness(p, v);
      ++replays;
      c.require(rep.outcome == *v.witness_outcome,
                std::string(mode_name(p.mode)) + " " + std::string(property_name(prop)) + ": model " +
                    std::string(outcome_name(*v.witness_outcome)) + ", replay " + std::string(outcome_name(rep.outcome)));
      std::string key;
      for (const auto& s : v.witness) key += s.role + ":" + s.action + ":" + s.payload + ";";
      distinct.insert(key);
    }
  }
  c.require(distinct.size() >= kMinWitnesses, "only " + std::to_string(distinct.size()) + " distinct witnesses");
  if (c.ok) c.note = std::to_string(distinct.size()) + " distinct witnesses, " + std::to_string(replays) + " replays";
  return c;
}

struct Handshake {
  Errc client = Errc::InvalidState;
  Errc server = Errc::InvalidState;
  Bytes client_key, server_key;
};

Handshake handshake(std::uint64_t seed, const Registry& reg, const std::string& user, const std::string& pw,
                    const SrpOptions& copts = {}, const SrpOptions& sopts = {}) {
  SimNetwork net(seed);
  auto ch = net.host("C");
  auto sh = net.host("S");
  std::shared_ptr<Acceptor> acc = sh->listen(sh->local(0));
  Handshake h;
  net.spawn("client", [&] {
    h.client = code_of([&] {
      h.client_key = client_handshake(ch->connect(acc->address()), SrpGroup::rfc5054_1024(), user, pw, copts)->session_key();
    });
  });
  net.spawn("server", [&] { h.server = code_of([&] { h.server_key = server_handshake(acc->accept(), reg, sopts)->session_key(); }); });
  net.run();
  return h;
}

Frame hs(SrpMsg m, ByteWriter body) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(m));
  w.raw(body.bytes());
  return Frame{FrameTag::Data, std::move(w).take()};
}

Check srp() {
  Check c;
  const SrpGroup& g = SrpGroup::rfc5054_1024();
  // Frozen from tests/oracles/srp_vector_oracle.py.
  Bytes salt = from_hex("BEB25379D1A8581EB5A727673A2441EE");
  BigNum x = srp_x(HashAlgo::Sha1, salt, "alice", "password123");
  c.require(x == BigNum::from_hex("94B7555AABE9127CC58CCF4993DB6CF84D16C124"), "x differs from the vector");
  auto rec = register_user(g, "alice", "password123", HashAlgo::Sha1, salt);
  c.require(rec.verifier ==
                BigNum::from_hex("7E273DE8696FFC4F4E337D05B4B375BEB0DDE1569E8FA00A9886D8129BADA1F1822223CA1A605B530E379BA4"
                                 "729FDC59F105B4787E5186F5C671085A1447B52A48CF1970B4FB6F8400BBF4CEBFBB168152E08AB5EA53D1"
                                 "5C1AFF87B2B9DA6E04E058AD51CC72BFC9033B564E26480D78E955A5E29E7AB245DB2BE315E2099AFB"),
            "v differs from the vector");
  Registry alice;
  alice.add(rec);
  SrpOptions copts, sopts;
  copts.hash = sopts.hash = HashAlgo::Sha1;
  copts.ephemeral = BigNum::from_hex("60975527035CF2AD1989806F0407210BC81EDC04E2762A56AFD529DDDA2D4393");
  sopts.ephemeral = BigNum::from_hex("E487CB59D31AC550471E81F00F6928E01DDA08E974A004F49E61F5D105284D20");
  auto v = handshake(1, alice, "alice", "password123", copts, sopts);
  c.require(v.client_key == from_hex("017EEFA1CEFC5C2E626E21598987F31E0F1B11BB") && v.server_key == v.client_key,
            "session key differs from the vector");

  testing::Rng rng(6);
  int agree = 0, rejected = 0;
  for (int i = 0; i < kHandshakes; ++i) {
    std::string pw = "pw-" + std::to_string(rng());
    Registry reg;
    reg.add(register_user(g, "user", pw));
    auto ok = handshake(rng(), reg, "user", pw);
    agree += ok.client == Errc::InvalidState && ok.server == Errc::InvalidState && !ok.client_key.empty() &&
             ok.client_key == ok.server_key;
    auto bad = handshake(rng(), reg, "user", pw + "!");
    rejected += bad.server == Errc::AuthFailed && bad.client == Errc::AuthFailed;
  }
  c.require(agree == kHandshakes, std::to_string(agree) + " of " + std::to_string(kHandshakes) + " handshakes agreed");
  c.require(rejected == kHandshakes, std::to_string(rejected) + " of " + std::to_string(kHandshakes) + " wrong passwords rejected");

  // Zero A.
  {
    SimNetwork net(1);
    auto ch = net.host("C");
    auto sh = net.host("S");
    std::shared_ptr<Acceptor> acc = sh->listen(sh->local(0));
    Errc server = Errc::InvalidState;
    net.spawn("raw client", [&] {
      auto e = ch->connect(acc->address());
      ByteWriter hello;
      hello.str8("alice");
      hello.str8(g.name);
      e->send(hs(SrpMsg::Hello, std::move(hello)));
      e->recv();
      ByteWriter a;
      a.blob16(Bytes(g.width(), 0));
      e->send(hs(SrpMsg::AMsg, std::move(a)));
    });
    net.spawn("server", [&] { server = code_of([&] { server_handshake(acc->accept(), alice); }); });
    net.run();
    c.require(server == Errc::IllegalParameter, "A = 0 accepted");
  }
  // Zero B.
  {
    SimNetwork net(1);
    auto ch = net.host("C");
    auto sh = net.host("S");
    std::shared_ptr<Acceptor> acc = sh->listen(sh->local(0));
    Errc client = Errc::InvalidState;
    net.spawn("client", [&] {
      client = code_of([&] { client_handshake(ch->connect(acc->address()), g, "alice", "password123"); });
    });
    net.spawn("raw server", [&] {
      auto e = acc->accept();
      e->recv();
      ByteWriter sb;
      sb.blob16(salt);
      sb.blob16(g.N.to_bytes(g.width()));
      e->send(hs(SrpMsg::SaltB, std::move(sb)));
      code_of([&] { e->recv(); });
    });
    net.run();
    c.require(client == Errc::IllegalParameter, "B = 0 mod N accepted");
  }
  // Replay of a recorded client transcript against a fresh server.
  {
    struct Recorder : AttackerTap {
      TapVerdict on_frame(const FrameEvent& ev, Frame& f) override {
        if (first == 0) first = ev.connection;
        if (ev.connection == first && ev.from.host == "C") frames.push_back(f);
        return TapVerdict::Forward;
      }
      std::uint64_t first = 0;
      std::vector<Frame> frames;
    };
    SimNetwork net(2);
    auto tap = std::make_shared<Recorder>();
    net.attach_attacker(tap);
    auto ch = net.host("C");
    auto sh = net.host("S");
    std::shared_ptr<Acceptor> acc = sh->listen(sh->local(0));
    Errc replay = Errc::InvalidState;
    net.spawn("client", [&] {
      client_handshake(ch->connect(acc->address()), g, "alice", "password123", copts);
      auto e = ch->connect(acc->address());
      e->send(tap->frames.at(0));
      e->recv();
      e->send(tap->frames.at(1));
      e->send(tap->frames.at(2));
      code_of([&] { e->recv(); });
    });
    net.spawn("server", [&] {
      server_handshake(acc->accept(), alice, sopts);
      SrpOptions fresh = sopts;
      fresh.ephemeral.reset();
      replay = code_of([&] { server_handshake(acc->accept(), alice, fresh); });
    });
    net.run();
    c.require(replay == Errc::AuthFailed, "replayed transcript accepted");
  }
  return c;
}

Check monitoring() {
  Check c;
  std::size_t delivered = 0, mismatched = 0;
  for (int i = 1; i <= kTrafficRuns; ++i) {
    auto st = testing::run_random_traffic(static_cast<std::uint64_t>(i));
    delivered += st.delivered;
    mismatched += st.mismatched;
  }
  c.require(mismatched == 0, std::to_string(mismatched) + " type-mismatched values delivered");

  // Fuzzed frames against a session expecting ?(int).
  testing::Rng rng(8);
  int caught = 0;
  for (int i = 0; i < kFuzzFrames; ++i) {
    Frame f{FrameTag::Data, encode_data(0, TypedValue::of("int", "1"))};
    switch (i % 4) {
      case 0:
        f.payload = encode_data(0, TypedValue::of(testing::base_names()[1 + rng() % 5], "1"));
        break;
      case 1:
        f.payload.resize(rng() % 5);
        break;
      case 2:
        f.tag = static_cast<FrameTag>(2 + rng() % 2);
        break;
      default:
        f.tag = static_cast<FrameTag>(5 + rng() % 6);
        if (f.tag == FrameTag::Ds) f.tag = FrameTag::Lm;
        break;
    }
    SimNetwork net(1);
    auto a = net.host("A");
    auto b = net.host("B");
    std::shared_ptr<Acceptor> acc = b->listen(b->local(0));
    bool leaked = false;
    Errc err = Errc::InvalidState;
    net.spawn("raw", [&] { a->connect(acc->address())->send(f); });
    net.spawn("session", [&] {
      SessionConfig cfg;
      cfg.network = b;
      Session s(acc->accept(), parse_type("?(int)"), SessionRole::Acceptor, cfg);
      err = code_of([&] {
        s.recv_value();
        leaked = true;
      });
    });
    net.run();
    caught += !leaked && err == Errc::TypeMismatch;
  }
  c.require(caught == kFuzzFrames, std::to_string(kFuzzFrames - caught) + " fuzzed frames not caught");
  if (c.ok) c.note = std::to_string(delivered) + " values delivered, " + std::to_string(caught) + " fuzzed frames caught";
  return c;
}

Check lost_messages() {
  Check c;
  int runs = 0;
  for (bool secure : {false, true}) {
    for (int k = 0; k <= 2; ++k) {
      for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto r = run_lost_messages(sim(secure, seed), k);
        ++runs;
        c.require(r.outcome == RunOutcome::Completed, "run did not complete");
        // FIFO replay: B pops what it consumed, C must see the rest in order.
        std::size_t at_b = 0;
        for (const auto& e : r.transcript->project("B")) at_b += e.action == "recv Item";
        std::deque<std::string> q(r.prescribed.begin(), r.prescribed.end());
        std::vector<std::string> expect;
        while (!q.empty()) {
          expect.push_back(q.front());
          q.pop_front();
        }
        c.require(at_b <= expect.size() && r.observed == expect,
                  "k=" + std::to_string(k) + " seed=" + std::to_string(seed) + ": sequence differs");
      }
    }
  }
  if (c.ok) c.note = std::to_string(runs) + " runs";
  return c;
}

struct Criterion {
  int id;
  const char* title;
  double limit;
  std::function<Check()> run;
};

}  // namespace
}  // namespace sessec

int main() {
  using namespace sessec;
  std::vector<Criterion> criteria{
      {1, "duality suite", kDualityLimit, duality},
      {2, "trace conformance", 0, conformance},
      {3, "vulnerability reproduction", kAttackLimit, attacks},
      {4, "model-checker verdicts", kModelLimit, model_verdicts},
      {5, "witness replay", 0, witness_replay},
      {6, "SRP correctness", kSrpLimit, srp},
      {7, "communication safety under monitoring", 0, monitoring},
      {8, "lost-message consistency", 0, lost_messages},
  };
  bool all = true;
  for (const auto& cr : criteria) {
    auto start = Clock::now();
    Check c;
    try {
      c = cr.run();
    } catch (const std::exception& e) {
      c.ok = false;
      c.note = std::string("exception: ") + e.what();
    }
    double t = seconds_since(start);
    if (cr.limit > 0 && t > cr.limit) {
      c.ok = false;
      c.note += (c.note.empty() ? "" : "; ") + std::string("over the time limit");
    }
    char timing[64];
    if (cr.limit > 0)
      std::snprintf(timing, sizeof timing, "%.2fs, limit %.0fs", t, cr.limit);
    else
      std::snprintf(timing, sizeof timing, "%.2fs", t);
    std::cout << "criterion " << cr.id << ": " << (c.ok ? "PASS" : "FAIL") << "  " << cr.title << " (" << timing
              << ")" << (c.note.empty() ? "" : ": " + c.note) << std::endl;
    all = all && c.ok;
  }
  return all ? 0 : 1;
}
