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

#include "sessec/scenario.hpp"

#include <filesystem>
#include <functional>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "sessec/crypto.hpp"
#include "sessec/error.hpp"
#include "sessec/tcp.hpp"

namespace sessec {

namespace {

const char* const kAttacker = "E";
const char* const kAttackerAccount = "eve";

struct RoleNames {
  std::string passive, sender, receiver;
};

/// State the roles of one run report into.
struct Shared {
  std::mutex mu;
  std::vector<std::string> prescribed, at_sender, at_receiver;
  std::map<std::string, std::string> errors;
  bool delegated = false;
  std::optional<DelegationStatus> sender_status, receiver_status;
  std::string sender_reason, receiver_reason;
  std::string receiver_peer;
  std::set<std::uint64_t> attacker_connections;
  std::optional<Credential> leaked;

  void note(std::vector<std::string>& into, std::string v) {
    std::lock_guard lk(mu);
    into.push_back(std::move(v));
  }
  void fail(const std::string& role, const std::string& what) {
    std::lock_guard lk(mu);
    errors.emplace(role, what);
  }
};

struct Script {
  RoleNames names;
  SrpIdentity passive_id, sender_id;
  SessionType passive_type, sender_type, carrier_out, carrier_in;
  std::function<void(Session&, Shared&)> passive;
  /// Returns true when the rest of the session is to be delegated.
  std::function<bool(Session&, Shared&)> sender;
  std::function<void(Session&, Shared&)> receiver;
};

/// Watches the simulated wire for the attacker. Runs under the network lock;
/// the attacker task reads these fields after wait_until on ds_seen.
class PlanTap final : public AttackerTap {
 public:
  PlanTap(const AttackPlan& plan, RoleNames names, bool secure) : plan_(plan), names_(std::move(names)), secure_(secure) {
    for (const auto& s : plan.suppress) suppress_.push_back({s, false});
  }

  TapVerdict on_frame(const FrameEvent& ev, Frame& f) override {
    const auto& from = ev.from.host;
    const auto& to = ev.to.host;
    std::string ch;
    bool to_passive = false;
    if ((from == names_.passive && to == names_.sender) || (from == names_.sender && to == names_.passive)) {
      ch = "s";
      s_conn = ev.connection;
      passive_addr = from == names_.passive ? ev.from : ev.to;
      to_passive = to == names_.passive;
    } else if ((from == names_.sender && to == names_.receiver) || (from == names_.receiver && to == names_.sender)) {
      ch = "s'";
    } else {
      return TapVerdict::Forward;
    }
    if (ch == "s'" && f.tag == FrameTag::StartDelegation) started_ = true;
    if (started_) {
      for (auto& [entry, used] : suppress_) {
        if (!used && entry.first == ch && entry.second == f.tag) {
          used = true;
          return TapVerdict::Suppress;
        }
      }
    }
    if (ch == "s" && to_passive && f.tag == FrameTag::Ds && !ds_seen) {
      ds_seen = true;
      ds_conn = ev.connection;
      ds_from = ev.from;
      if (!secure_) {
        try {
          port = DelegationSignal::decode(f.payload).receiver_port;
        } catch (const Error&) {
        }
      }
      if (plan_.intercept_ds && !secure_) return TapVerdict::Suppress;
      if (plan_.hold_ds) {
        held = f;
        return TapVerdict::Suppress;
      }
    }
    return TapVerdict::Forward;
  }

  bool ds_seen = false;
  std::uint64_t ds_conn = 0;
  Address ds_from;
  std::optional<std::uint16_t> port;
  std::optional<Frame> held;
  std::uint64_t s_conn = 0;
  Address passive_addr;

 private:
  AttackPlan plan_;
  RoleNames names_;
  bool secure_;
  bool started_ = false;
  std::vector<std::pair<std::pair<std::string, FrameTag>, bool>> suppress_;
};

Frame empty_lm_batch() {
  ByteWriter w;
  w.u32(0);
  w.u8(0);
  w.u32(0);
  return Frame{FrameTag::Lm, std::move(w).take()};
}

void run_attacker(SimNetwork& net, Network& enet, PlanTap& tap, const AttackPlan& plan, const Script& sc,
                  const ScenarioOptions& opts, std::uint16_t receiver_main_port, Shared& sh, Transcript& tr) {
  auto log = [&](const std::string& action, const std::string& channel, const std::string& detail = {}) {
    tr.record(kAttacker, action, channel, {}, detail);
  };
  try {
    net.wait_until([&] { return tap.ds_seen; }, opts.timeout * 4);
  } catch (const Error& e) {
    if (e.code() == Errc::Timeout) return;
    throw;
  }
  auto release = [&] {
    if (plan.hold_ds && tap.held) {
      log("release DS", "s");
      Frame f = *tap.held;
      tap.held.reset();
      net.inject(tap.ds_conn, tap.ds_from, std::move(f));
    }
  };

  try {
    std::optional<std::uint16_t> port;
    if (plan.intercept_ds && tap.port) {
      port = tap.port;
      log("intercept DS", "s", "port " + std::to_string(*port));
    } else if (plan.scan) {
      for (const auto& a : net.listening(sc.names.receiver))
        if (a.port != receiver_main_port && (!port || a.port > *port)) port = a.port;
      log("scan", {}, port ? "found port " + std::to_string(*port) : "nothing new");
    }
    if (plan.inject_dsack && tap.s_conn) {
      log("inject DSACK", "s");
      net.inject(tap.s_conn, tap.passive_addr, Frame{FrameTag::DsAck, {}});
    }
    if (plan.connect && port) {
      auto ch = enet.connect(Address::sim(sc.names.receiver, *port));
      {
        std::lock_guard lk(sh.mu);
        sh.attacker_connections.insert(ch->connection_id());
      }
      log("connect", "z", "port " + std::to_string(*port));
      if (opts.secure) {
        SrpOptions so;
        so.timeout = opts.timeout;
        ch = client_handshake(std::move(ch), SrpGroup::rfc5054_1024(), kAttackerAccount,
                              demo_password(kAttackerAccount), so);
      }
      std::string verdict = opts.secure ? "" : "Success";
      if (plan.cred != AttackPlan::Cred::None) {
        Credential c = make_credential();
        {
          std::lock_guard lk(sh.mu);
          if (plan.cred == AttackPlan::Cred::Leaked && sh.leaked) c = *sh.leaked;
        }
        log("send CRED", "z", plan.cred == AttackPlan::Cred::Leaked ? "leaked" : "guessed");
        ch->send(Frame{FrameTag::Cred, Bytes(c.bytes.begin(), c.bytes.end())});
        if (opts.secure) {
          Frame v = ch->recv_for(opts.timeout);
          if (v.tag == FrameTag::Branch) {
            ByteReader r(v.payload);
            r.u32();
            verdict = r.str8();
          }
          log("recv " + verdict, "z");
        }
      }
      if (plan.send_lm && verdict == "Success") {
        log("send LM", "z", "0 frame(s)");
        ch->send(empty_lm_batch());
      }
      release();
      ch->close();
    }
  } catch (const Error& e) {
    log("gave up", "z", e.what());
  }
  release();
}

std::string error_text(std::exception_ptr p) {
  try {
    std::rethrow_exception(p);
  } catch (const std::exception& e) {
    return e.what();
  } catch (...) {
    return "unknown error";
  }
}

ScenarioReport run_script(const Script& sc, const ScenarioOptions& opts) {
  if (opts.attack && opts.transport != TransportKind::Sim)
    throw Error(Errc::InvalidArgument, "the attacker runs on the simulated network only");
  ScenarioReport rep;
  rep.transcript = std::make_shared<Transcript>();
  Shared sh;

  std::unique_ptr<SimNetwork> sim;
  std::shared_ptr<Network> pnet, snet, rnet;
  if (opts.transport == TransportKind::Sim) {
    sim = std::make_unique<SimNetwork>(opts.seed);
    pnet = sim->host(sc.names.passive);
    snet = sim->host(sc.names.sender);
    rnet = sim->host(sc.names.receiver);
  } else {
    pnet = std::make_shared<TcpNetwork>();
    snet = std::make_shared<TcpNetwork>();
    rnet = std::make_shared<TcpNetwork>();
  }
  std::shared_ptr<const Registry> registry;
  if (opts.secure) registry = opts.registry ? opts.registry : demo_registry();

  std::shared_ptr<Acceptor> sender_acc = snet->listen(snet->local(0));
  std::shared_ptr<Acceptor> receiver_acc = rnet->listen(rnet->local(0));
  const Address sender_addr = sender_acc->address();
  const Address receiver_addr = receiver_acc->address();

  auto base = [&](std::shared_ptr<Network> n, const std::string& role) {
    SessionConfig c;
    c.network = std::move(n);
    c.role = role;
    c.transcript = rep.transcript;
    c.secure_delegation = opts.secure;
    c.timeout = opts.timeout;
    c.srp.timeout = opts.timeout;
    return c;
  };

  auto guarded = [&](const std::string& role, std::function<void()> body) {
    return [&sh, role, body = std::move(body)] {
      try {
        body();
      } catch (const std::exception& e) {
        sh.fail(role, e.what());
      }
    };
  };

  auto passive = guarded(sc.names.passive, [&] {
    auto cfg = base(pnet, sc.names.passive);
    if (opts.secure) cfg.srp_identity = sc.passive_id;
    auto s = request_session(*pnet, sender_addr, sc.passive_type, cfg);
    sc.passive(*s, sh);
    s->close();
  });

  auto sender = guarded(sc.names.sender, [&] {
    bool carrier_requested = false;
    try {
      auto cfg = base(snet, sc.names.sender);
      if (opts.secure) cfg.srp_registry = registry;
      auto t = accept_session(*sender_acc, sc.sender_type, cfg);
      sender_acc->close();
      if (!sc.sender(*t, sh)) {
        t->close();
        receiver_acc->close();
        return;
      }
      auto ccfg = base(snet, sc.names.sender);
      ccfg.channel = "s'";
      if (opts.secure) ccfg.srp_identity = sc.sender_id;
      ccfg.credential_observer = [&sh](ByteView b) {
        std::lock_guard lk(sh.mu);
        sh.leaked = Credential::from(b);
      };
      carrier_requested = true;
      auto carrier = request_session(*snet, receiver_addr, sc.carrier_out, ccfg);
      {
        std::lock_guard lk(sh.mu);
        sh.delegated = true;
      }
      auto out = delegate(*t, *carrier, opts.secure);
      {
        std::lock_guard lk(sh.mu);
        sh.sender_status = out.status;
        sh.sender_reason = out.reason;
      }
      carrier->close();
    } catch (...) {
      if (!carrier_requested) receiver_acc->close();
      throw;
    }
  });

  auto receiver = guarded(sc.names.receiver, [&] {
    auto cfg = base(rnet, sc.names.receiver);
    cfg.channel = "s'";
    if (opts.secure) cfg.srp_registry = registry;
    std::unique_ptr<Session> carrier;
    try {
      carrier = accept_session(*receiver_acc, sc.carrier_in, cfg);
    } catch (const Error& e) {
      // Closed by the sender when it has nothing to delegate.
      if (e.code() == Errc::ChannelClosed && !receiver_acc->is_open()) return;
      throw;
    }
    receiver_acc->close();
    auto out = receive_delegation(*carrier, opts.secure);
    {
      std::lock_guard lk(sh.mu);
      sh.receiver_status = out.status;
      sh.receiver_reason = out.reason;
      if (out.migrated) {
        bool by_attacker = sh.attacker_connections.count(out.migrated->channel().connection_id()) > 0 ||
                           out.migrated->peer_identity() == kAttackerAccount;
        sh.receiver_peer = by_attacker ? kAttacker : sc.names.passive;
      }
    }
    if (out.migrated) {
      sc.receiver(*out.migrated, sh);
      out.migrated->close();
    }
    carrier->close();
  });

  if (sim) {
    std::shared_ptr<PlanTap> tap;
    std::shared_ptr<Network> enet;
    if (opts.attack) {
      tap = std::make_shared<PlanTap>(*opts.attack, sc.names, opts.secure);
      sim->attach_attacker(tap);
      enet = sim->host(kAttacker);
      sim->spawn(kAttacker, guarded(kAttacker, [&] {
                   run_attacker(*sim, *enet, *tap, *opts.attack, sc, opts, receiver_addr.port, sh, *rep.transcript);
                 }));
    }
    sim->spawn(sc.names.passive, passive);
    sim->spawn(sc.names.sender, sender);
    sim->spawn(sc.names.receiver, receiver);
    for (const auto& r : sim->run())
      if (r.error) sh.fail(r.name, error_text(r.error));
    rep.trace = sim->trace();
  } else {
    std::thread tp(passive), ts(sender), tr(receiver);
    tp.join();
    ts.join();
    tr.join();
  }

  std::lock_guard lk(sh.mu);
  rep.delegated = sh.delegated;
  rep.sender_status = sh.sender_status;
  rep.receiver_status = sh.receiver_status;
  rep.receiver_peer = sh.receiver_peer;
  rep.errors = sh.errors;
  rep.prescribed = sh.prescribed;
  rep.observed = sh.at_sender;
  rep.observed.insert(rep.observed.end(), sh.at_receiver.begin(), sh.at_receiver.end());

  if (sh.receiver_status == DelegationStatus::Completed) {
    rep.outcome = sh.receiver_peer == kAttacker ? RunOutcome::Infiltrated : RunOutcome::Completed;
    rep.reason = rep.outcome == RunOutcome::Infiltrated ? "receiver completed reconnection with the attacker"
                                                        : "receiver completed reconnection with " + sc.names.passive;
  } else if (sh.receiver_status == DelegationStatus::CredentialRejected) {
    rep.outcome = RunOutcome::Blocked;
    rep.reason = sh.receiver_reason;
  } else if (!sh.delegated && sh.errors.empty()) {
    rep.outcome = RunOutcome::Completed;
    rep.reason = "finished without delegation";
  } else {
    rep.outcome = RunOutcome::Stuck;
    if (!sh.receiver_reason.empty()) {
      rep.reason = sh.receiver_reason;
    } else if (auto it = sh.errors.find(sc.names.receiver); it != sh.errors.end()) {
      rep.reason = it->second;
    } else if (!sh.errors.empty()) {
      rep.reason = sh.errors.begin()->first + ": " + sh.errors.begin()->second;
    }
  }
  return rep;
}

MessageType base(const char* name) { return MessageType::base(name); }

}  // namespace

std::string demo_password(const std::string& user) {
  if (user == "customer") return "customer-demo-password";
  if (user == "vendor") return "vendor-demo-password";
  if (user == kAttackerAccount) return "eve-demo-password";
  throw Error(Errc::InvalidArgument, "no demo account '" + user + "'");
}

std::shared_ptr<const Registry> demo_registry() {
  static std::once_flag once;
  static std::shared_ptr<const Registry> reg;
  std::call_once(once, [] {
    const std::string path = std::string(SESSEC_DATA_DIR) + "/demo_registry.txt";
    if (std::filesystem::exists(path)) {
      reg = std::make_shared<const Registry>(Registry::load(path));
      return;
    }
    auto r = std::make_shared<Registry>();
    for (const char* u : {"customer", "vendor", kAttackerAccount})
      r->add(register_user(SrpGroup::rfc5054_1024(), u, demo_password(u)));
    reg = std::move(r);
  });
  return reg;
}

ScenarioReport run_purchase(const ScenarioOptions& opts, int items, bool checkout) {
  if (items < 0) throw Error(Errc::InvalidArgument, "item count must not be negative");
  Script sc;
  sc.names = {"C", "V", "H"};
  sc.passive_id = {"customer", demo_password("customer")};
  sc.sender_id = {"vendor", demo_password("vendor")};

  // ?(CreditCard).!<Receipt> from the handler's side
  const SessionType pay = SessionType::recv(base("CreditCard"), SessionType::send(base("Receipt"), {}));
  const SessionType checkout_c = SessionType::send(base("CreditCard"), SessionType::recv(base("Receipt"), {}));
  const SessionType basket_c =
      SessionType::out_iter(SessionType::send(base("ProductId"), SessionType::recv(base("int"), {})),
                            SessionType::select({{"CHECKOUT", checkout_c}, {"EXIT", {}}}));
  sc.passive_type = SessionType::begin(Side::Client, SessionType::recv(base("ProductList"), basket_c));
  sc.sender_type = dual(sc.passive_type);
  sc.carrier_out = SessionType::begin(Side::Client, SessionType::send(MessageType::session(pay), {}));
  sc.carrier_in = SessionType::begin(Side::Server, SessionType::recv(MessageType::session(pay), {}));

  sc.passive = [items, checkout](Session& s, Shared& sh) {
    s.recv_value();
    for (int i = 0; i < items; ++i) {
      s.iter_continue(true);
      auto v = TypedValue::of("ProductId", "product-" + std::to_string(i + 1));
      sh.note(sh.prescribed, v.text());
      s.send_value(v);
      s.recv_value();
    }
    s.iter_continue(false);
    if (!checkout) {
      s.select_label("EXIT");
      return;
    }
    s.select_label("CHECKOUT");
    auto card = TypedValue::of("CreditCard", "4111-1111-1111-1111");
    sh.note(sh.prescribed, card.text());
    s.send_value(card);
    s.recv_value();
  };
  sc.sender = [](Session& s, Shared& sh) {
    s.send_value(TypedValue::of("ProductList", "book,lamp,pen"));
    int total = 0;
    while (s.iter_follow()) {
      sh.note(sh.at_sender, s.recv_value().text());
      total += 10;
      s.send_value(TypedValue::of("int", std::to_string(total)));
    }
    return s.offer_labels() == "CHECKOUT";
  };
  sc.receiver = [](Session& s, Shared& sh) {
    auto card = s.recv_value();
    sh.note(sh.at_receiver, card.text());
    s.send_value(TypedValue::of("Receipt", "paid with card ending " + card.text().substr(card.text().size() - 4)));
  };
  return run_script(sc, opts);
}

ScenarioReport run_lost_messages(const ScenarioOptions& opts, int k) {
  if (k < 0) throw Error(Errc::InvalidArgument, "k must not be negative");
  Script sc;
  sc.names = {"A", "B", "C"};
  sc.passive_id = {"customer", demo_password("customer")};
  sc.sender_id = {"vendor", demo_password("vendor")};

  SessionType rest_a = SessionType::recv(base("Receipt"), {});
  SessionType rest_b = SessionType::send(base("Receipt"), {});
  for (int i = 0; i < k; ++i) {
    rest_a = SessionType::send(base("Item"), rest_a);
    rest_b = SessionType::recv(base("Item"), rest_b);
  }
  sc.passive_type = SessionType::begin(
      Side::Client, SessionType::send(base("Item"), SessionType::recv(base("Ack"), rest_a)));
  sc.sender_type = dual(sc.passive_type);
  sc.carrier_out = SessionType::begin(Side::Client, SessionType::send(MessageType::session(rest_b), {}));
  sc.carrier_in = SessionType::begin(Side::Server, SessionType::recv(MessageType::session(rest_b), {}));

  sc.passive = [k](Session& s, Shared& sh) {
    auto send = [&](int i) {
      auto v = TypedValue::of("Item", "item-" + std::to_string(i));
      sh.note(sh.prescribed, v.text());
      s.send_value(v);
    };
    send(0);
    s.recv_value();
    for (int i = 1; i <= k; ++i) send(i);
    s.recv_value();
  };
  sc.sender = [](Session& s, Shared& sh) {
    sh.note(sh.at_sender, s.recv_value().text());
    s.send_value(TypedValue::of("Ack", "ok"));
    return true;
  };
  sc.receiver = [k](Session& s, Shared& sh) {
    for (int i = 0; i < k; ++i) sh.note(sh.at_receiver, s.recv_value().text());
    s.send_value(TypedValue::of("Receipt", std::to_string(k) + " item(s)"));
  };
  return run_script(sc, opts);
}

AttackPlan interception_attack(bool secure, bool leak_credential) {
  AttackPlan p;
  p.connect = true;
  p.send_lm = true;
  if (secure) {
    // The signal is sealed, so find the port by scanning and get in ahead of the customer.
    p.scan = true;
    p.hold_ds = true;
    p.cred = leak_credential ? AttackPlan::Cred::Leaked : AttackPlan::Cred::Guessed;
  } else {
    p.intercept_ds = true;
  }
  return p;
}

AttackPlan plan_from_witness(const std::vector<WitnessStep>& witness) {
  AttackPlan p;
  bool passive_saw_ds = false;
  for (const auto& s : witness) {
    if (!s.attacker) {
      if (s.role == "A" && s.action == "recv" && s.payload == "DS") passive_saw_ds = true;
      continue;
    }
    if (s.action == "intercept") {
      p.intercept_ds = true;
    } else if (s.action == "scan") {
      p.scan = true;
    } else if (s.action == "inject") {
      p.inject_dsack = true;
    } else if (s.action == "connect" || s.action == "connect refused") {
      p.connect = true;
      p.hold_ds = !p.intercept_ds && !passive_saw_ds;
    } else if (s.action == "send" && s.payload.rfind("CRED", 0) == 0) {
      p.cred = s.payload.find("leaked") != std::string::npos ? AttackPlan::Cred::Leaked : AttackPlan::Cred::Guessed;
    } else if (s.action == "send" && s.payload.rfind("LM", 0) == 0) {
      p.send_lm = true;
    } else if (s.action == "suppress") {
      static const std::map<std::string, FrameTag> tags{{"START_DELEGATION", FrameTag::StartDelegation},
                                                        {"PORT", FrameTag::Port},
                                                        {"DS", FrameTag::Ds},
                                                        {"DSACK", FrameTag::DsAck},
                                                        {"DATA", FrameTag::Data}};
      if (auto it = tags.find(s.payload); it != tags.end()) p.suppress.emplace_back(s.channel, it->second);
    }
  }
  return p;
}

ScenarioReport replay_witness(const ModelParams& params, const Verdict& verdict, std::uint64_t seed) {
  ScenarioOptions opts;
  opts.secure = params.mode == ProtocolMode::Secure;
  opts.seed = seed;
  opts.attack = plan_from_witness(verdict.witness);
  return run_lost_messages(opts, params.k);
}

std::string report_to_text(const ScenarioReport& r) {
  std::ostringstream os;
  os << "outcome: " << outcome_name(r.outcome) << "\n";
  if (!r.reason.empty()) os << "reason: " << r.reason << "\n";
  if (r.sender_status) os << "sender: " << status_name(*r.sender_status) << "\n";
  if (r.receiver_status) os << "receiver: " << status_name(*r.receiver_status) << "\n";
  for (const auto& [role, what] : r.errors) os << "error at " << role << ": " << what << "\n";
  os << "transcript:\n" << r.transcript->to_text();
  return os.str();
}

std::string report_to_json(const ScenarioReport& r) {
  nlohmann::json j;
  j["outcome"] = std::string(outcome_name(r.outcome));
  j["reason"] = r.reason;
  j["delegated"] = r.delegated;
  j["sender_status"] = r.sender_status ? nlohmann::json(std::string(status_name(*r.sender_status))) : nullptr;
  j["receiver_status"] = r.receiver_status ? nlohmann::json(std::string(status_name(*r.receiver_status))) : nullptr;
  j["receiver_peer"] = r.receiver_peer;
  j["errors"] = r.errors;
  j["prescribed"] = r.prescribed;
  j["observed"] = r.observed;
  j["transcript"] = nlohmann::json::parse(r.transcript->to_json());
  return j.dump(2);
}

}  // namespace sessec
