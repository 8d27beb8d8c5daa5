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

#include "sessec/model_checker.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <functional>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "sessec/error.hpp"

namespace sessec {

namespace {

enum Kind : std::uint8_t { kSd = 1, kPort, kDs, kAck, kCred, kSuccess, kFail, kLm, kData };
enum Who : std::uint8_t { kNobody = 0, kA, kB, kC, kE };
// Credential atoms: B's fresh one, or anything E makes up.
enum Atom : std::uint8_t { kNoCred = 0, kFresh = 1, kGuessed = 2 };

// Session channels by direction.
enum Ch : std::uint8_t { AB, BA, BC, CB };
constexpr const char* kChName[] = {"s", "s", "s'", "s'"};

enum APc : std::uint8_t { A_WaitDs, A_Ack, A_Close, A_Connect, A_SendCred, A_WaitVerdict, A_SendLm, A_Done, A_Failed };
enum BPc : std::uint8_t { B_MakeCred, B_SendSd, B_WaitPort, B_SendDs, B_WaitAck, B_Close, B_Done, B_Failed };
enum CPc : std::uint8_t {
  C_WaitSd, C_Open, C_SendPort, C_Accept, C_WaitCred, C_Pass, C_Fail, C_WaitLm, C_Completed, C_Rejected, C_Aborted
};

enum PortState : std::uint8_t { P_None, P_Listening, P_Closed };
enum ConnState : std::uint8_t { X_None, X_Pending, X_Accepted, X_Reset, X_ClosedByC };

struct Msg {
  std::uint8_t kind = 0;
  std::uint8_t cred = kNoCred;
  std::uint8_t origin = kNobody;
};

struct Conn {
  std::uint8_t st = X_None;
  std::vector<Msg> up;    // client -> C
  std::vector<Msg> down;  // C -> client
};

const char* kind_name(std::uint8_t k) {
  switch (k) {
    case kSd: return "START_DELEGATION";
    case kPort: return "PORT";
    case kDs: return "DS";
    case kAck: return "DSACK";
    case kCred: return "CRED";
    case kSuccess: return "Success";
    case kFail: return "Fail";
    case kLm: return "LM";
    case kData: return "DATA";
  }
  return "?";
}

// All string fields point at literals.
struct Move {
  const char* role = "";
  const char* action = "";
  const char* channel = "";
  const char* payload = "";
  const char* step = "";
  bool attacker = false;
};

}  // namespace

struct ProtocolModel::State {
  std::uint8_t a = A_WaitDs, b = B_MakeCred, c = C_WaitSd;
  std::uint8_t port = P_None;
  std::vector<std::uint8_t> backlog;
  std::uint8_t c_peer = kNobody;
  std::uint8_t b_cred = kNoCred, c_cred = kNoCred, a_cred = kNoCred;
  std::uint8_t a_has_port = 0;
  std::uint8_t s_closed_a = 0, s_closed_b = 0;
  std::array<std::vector<Msg>, 4> ch;
  std::array<Conn, 2> conn;  // [0] A's reconnection, [1] E's
  // attacker knowledge and progress
  std::uint8_t e_port = 0, e_cred = kNoCred, e_intercepted = 0, e_injected = 0, e_sent_cred = 0, e_sent_lm = 0;
  // history
  std::uint8_t ds_sent = 0, interfered = 0, fresh_bad = 0, linear_bad = 0, check_passed = 0, lm_from_a = 0;

  std::string key() const {
    std::string k;
    k.reserve(96);
    auto put = [&](std::uint8_t v) { k.push_back(static_cast<char>(v)); };
    auto put_msgs = [&](const std::vector<Msg>& q) {
      put(static_cast<std::uint8_t>(q.size()));
      for (const Msg& m : q) {
        put(m.kind);
        put(m.cred);
        put(m.origin);
      }
    };
    for (std::uint8_t v : {a, b, c, port, c_peer, b_cred, c_cred, a_cred, a_has_port, s_closed_a, s_closed_b, e_port,
                           e_cred, e_intercepted, e_injected, e_sent_cred, e_sent_lm, ds_sent, interfered, fresh_bad,
                           linear_bad, check_passed, lm_from_a})
      put(v);
    put(static_cast<std::uint8_t>(backlog.size()));
    for (auto w : backlog) put(w);
    for (const auto& q : ch) put_msgs(q);
    for (const auto& x : conn) {
      put(x.st);
      put_msgs(x.up);
      put_msgs(x.down);
    }
    return k;
  }
};

namespace {

using State = ProtocolModel::State;
using Succ = std::vector<std::pair<Move, State>>;

void close_port(State& s) {
  s.port = P_Closed;
  for (auto who : s.backlog) {
    Conn& x = s.conn[who == kA ? 0 : 1];
    x.st = X_Reset;
    x.up.clear();
    x.down.clear();
  }
  s.backlog.clear();
}

Msg pop(std::vector<Msg>& q) {
  Msg m = q.front();
  q.erase(q.begin());
  return m;
}

struct Expander {
  const ModelParams& p;
  bool secure() const { return p.mode == ProtocolMode::Secure; }
  const char* st(const char* secure_label, const char* original_label) const {
    return secure() ? secure_label : original_label;
  }

  void passive(const State& s, Succ& out) const {
    auto add = [&](Move m, State n) {
      m.role = "A";
      out.emplace_back(m, std::move(n));
    };
    switch (s.a) {
      case A_WaitDs:
        if (!s.ch[BA].empty()) {
          State n = s;
          Msg m = pop(n.ch[BA]);
          n.a_cred = m.cred;
          n.a_has_port = 1;
          n.a = A_Ack;
          add({.action = "recv", .channel = "s", .payload = "DS"}, std::move(n));
        } else if (s.s_closed_b) {
          State n = s;
          n.a = A_Failed;
          add({.action = "session closed before delegation", .channel = "s"}, std::move(n));
        }
        break;
      case A_Ack: {
        State n = s;
        if (!n.s_closed_b) n.ch[AB].push_back({kAck, kNoCred, kA});
        n.a = A_Close;
        add({.action = "send", .channel = "s", .payload = "DSACK", .step = st("6", "5")}, std::move(n));
        break;
      }
      case A_Close: {
        State n = s;
        n.s_closed_a = 1;
        n.ch[BA].clear();
        n.a = A_Connect;
        add({.action = "close", .channel = "s", .step = st("7", "6")}, std::move(n));
        break;
      }
      case A_Connect: {
        State n = s;
        if (n.port == P_Listening) {
          n.backlog.push_back(kA);
          n.conn[0].st = X_Pending;
          n.a = secure() ? A_SendCred : A_SendLm;
          add({.action = "connect", .channel = "x", .step = st("8", "7")}, std::move(n));
        } else {
          n.conn[0].st = X_Reset;
          n.a = A_Failed;
          add({.action = "connect refused", .channel = "x"}, std::move(n));
        }
        break;
      }
      case A_SendCred: {
        State n = s;
        if (n.conn[0].st == X_Reset) {
          n.a = A_Failed;
          add({.action = "connection reset", .channel = "x"}, std::move(n));
        } else {
          n.conn[0].up.push_back({kCred, n.a_cred, kA});
          n.a = A_WaitVerdict;
          add({.action = "send", .channel = "x", .payload = "CRED", .step = "9"}, std::move(n));
        }
        break;
      }
      case A_WaitVerdict: {
        const Conn& x = s.conn[0];
        if (!x.down.empty()) {
          State n = s;
          Msg m = pop(n.conn[0].down);
          if (m.kind == kSuccess) {
            n.a = A_SendLm;
            add({.action = "recv", .channel = "x", .payload = "Success", .step = "9a"}, std::move(n));
          } else {
            n.a = A_Failed;
            add({.action = "recv", .channel = "x", .payload = "Fail", .step = "9b"}, std::move(n));
          }
        } else if (x.st == X_Reset || x.st == X_ClosedByC) {
          State n = s;
          n.a = A_Failed;
          add({.action = "connection reset", .channel = "x"}, std::move(n));
        }
        break;
      }
      case A_SendLm: {
        State n = s;
        if (n.conn[0].st == X_Reset || n.conn[0].st == X_ClosedByC) {
          n.a = A_Failed;
          add({.action = "connection reset", .channel = "x"}, std::move(n));
        } else {
          n.conn[0].up.push_back({kLm, kNoCred, kA});
          n.a = A_Done;
          add({.action = "send", .channel = "x", .payload = "LM(A_1..A_k)", .step = st("10", "8")}, std::move(n));
        }
        break;
      }
      default:
        break;
    }
  }

  void sender(const State& s, Succ& out) const {
    auto add = [&](Move m, State n) {
      m.role = "B";
      out.emplace_back(m, std::move(n));
    };
    switch (s.b) {
      case B_MakeCred: {
        State n = s;
        if (secure()) {
          n.b_cred = kFresh;
          n.b = B_SendSd;
          add({.action = "create credential", .step = "1"}, std::move(n));
        } else {
          n.b = B_SendSd;
          return sender(n, out);
        }
        break;
      }
      case B_SendSd: {
        State n = s;
        n.ch[BC].push_back({kSd, n.b_cred, kB});
        if (n.b_cred != kFresh) n.fresh_bad = 1;
        n.b = B_WaitPort;
        add({.action = "send", .channel = "s'", .payload = secure() ? "START_DELEGATION::CRED" : "START_DELEGATION",
             .step = st("2", "1")},
            std::move(n));
        break;
      }
      case B_WaitPort:
        if (!s.ch[CB].empty()) {
          State n = s;
          pop(n.ch[CB]);
          n.b = B_SendDs;
          add({.action = "recv", .channel = "s'", .payload = "PORT"}, std::move(n));
        }
        break;
      case B_SendDs: {
        State n = s;
        if (!n.s_closed_a) n.ch[BA].push_back({kDs, n.b_cred, kB});
        if (n.b_cred != kFresh) n.fresh_bad = 1;
        n.ds_sent = 1;
        n.b = B_WaitAck;
        add({.action = "send", .channel = "s", .payload = secure() ? "DS(S', IP, port, CRED)" : "DS(S', IP, port)",
             .step = st("5", "4")},
            std::move(n));
        break;
      }
      case B_WaitAck:
        if (!s.ch[AB].empty()) {
          State n = s;
          Msg m = pop(n.ch[AB]);
          if (m.kind == kAck) {
            n.b = B_Close;
            add({.action = "recv", .channel = "s", .payload = "DSACK"}, std::move(n));
          } else {
            add({.action = "discard unconsumed", .channel = "s", .payload = kind_name(m.kind)}, std::move(n));
          }
        } else if (s.s_closed_a) {
          State n = s;
          n.b = B_Failed;
          add({.action = "session closed without DSACK", .channel = "s"}, std::move(n));
        }
        break;
      case B_Close: {
        State n = s;
        n.s_closed_b = 1;
        n.ch[AB].clear();
        n.b = B_Done;
        add({.action = "close", .channel = "s", .step = st("7'", "6'")}, std::move(n));
        break;
      }
      default:
        break;
    }
  }

  void receiver(const State& s, Succ& out) const {
    auto add = [&](Move m, State n) {
      m.role = "C";
      out.emplace_back(m, std::move(n));
    };
    switch (s.c) {
      case C_WaitSd:
        if (!s.ch[BC].empty()) {
          State n = s;
          Msg m = pop(n.ch[BC]);
          n.c_cred = m.cred;
          n.c = C_Open;
          add({.action = "recv", .channel = "s'", .payload = "START_DELEGATION"}, std::move(n));
        }
        break;
      case C_Open: {
        State n = s;
        n.port = P_Listening;
        n.c = C_SendPort;
        add({.action = "open port", .step = st("3", "2")}, std::move(n));
        break;
      }
      case C_SendPort: {
        State n = s;
        n.ch[CB].push_back({kPort, kNoCred, kC});
        n.c = C_Accept;
        add({.action = "send", .channel = "s'", .payload = "PORT", .step = st("4", "3")}, std::move(n));
        break;
      }
      case C_Accept:
        if (s.port == P_Listening && !s.backlog.empty()) {
          State n = s;
          n.c_peer = n.backlog.front();
          n.backlog.erase(n.backlog.begin());
          n.conn[n.c_peer == kA ? 0 : 1].st = X_Accepted;
          const char* who = n.c_peer == kA ? "from A" : "from E";
          if (secure()) {
            n.c = C_WaitCred;
          } else {
            close_port(n);
            n.c = C_WaitLm;
          }
          add({.action = "accept", .channel = "x", .payload = who}, std::move(n));
        }
        break;
      case C_WaitCred: {
        const Conn& x = s.conn[s.c_peer == kA ? 0 : 1];
        if (!x.up.empty()) {
          State n = s;
          Msg m = pop(n.conn[n.c_peer == kA ? 0 : 1].up);
          bool ok = m.kind == kCred && m.cred != kNoCred && m.cred == n.c_cred;
          n.c = ok ? C_Pass : C_Fail;
          add({.action = "check", .channel = "x", .payload = ok ? "CRED matches" : "CRED mismatch", .step = "9'"},
              std::move(n));
        }
        break;
      }
      case C_Pass: {
        State n = s;
        n.conn[n.c_peer == kA ? 0 : 1].down.push_back({kSuccess, kNoCred, kC});
        n.check_passed = 1;
        close_port(n);
        n.c = C_WaitLm;
        add({.action = "send", .channel = "x", .payload = "Success", .step = "9a'"}, std::move(n));
        break;
      }
      case C_Fail: {
        State n = s;
        Conn& x = n.conn[n.c_peer == kA ? 0 : 1];
        x.down.push_back({kFail, kNoCred, kC});
        x.st = X_ClosedByC;
        x.up.clear();
        close_port(n);
        n.c = C_Rejected;
        add({.action = "reject, close port", .channel = "x", .payload = "Fail", .step = "9b'"}, std::move(n));
        break;
      }
      case C_WaitLm: {
        const Conn& x = s.conn[s.c_peer == kA ? 0 : 1];
        if (!x.up.empty()) {
          State n = s;
          Msg m = pop(n.conn[n.c_peer == kA ? 0 : 1].up);
          if (m.kind == kLm) {
            n.lm_from_a = m.origin == kA;
            n.c = C_Completed;
            add({.action = "recv", .channel = "x", .payload = "LM"}, std::move(n));
          } else {
            n.c = C_Aborted;
            add({.action = "abort", .channel = "x", .payload = kind_name(m.kind)}, std::move(n));
          }
        }
        break;
      }
      default:
        break;
    }
  }

  void attacker(const State& s, Succ& out) const {
    auto add = [&](Move m, State n) {
      m.role = "E";
      m.attacker = true;
      out.emplace_back(m, std::move(n));
    };
    const AttackerCaps& caps = p.caps;
    if (caps.intercept && !secure() && !s.e_intercepted && !s.ch[BA].empty() && s.ch[BA].front().kind == kDs) {
      State n = s;
      Msg m = pop(n.ch[BA]);
      n.e_port = 1;
      n.e_cred = m.cred;
      n.e_intercepted = 1;
      n.interfered = 1;
      add({.action = "intercept", .channel = "s", .payload = "DS"}, std::move(n));
    }
    if (caps.scan && s.ds_sent && s.port == P_Listening && !s.e_port) {
      State n = s;
      n.e_port = 1;
      add({.action = "scan", .payload = "receiver port"}, std::move(n));
    }
    if (caps.leaked_credential && s.b_cred == kFresh && s.e_cred != kFresh) {
      State n = s;
      n.e_cred = kFresh;
      add({.action = "learn leaked credential", .payload = "CRED"}, std::move(n));
    }
    if (caps.inject && !secure() && s.ds_sent && !s.e_injected && !s.s_closed_b) {
      State n = s;
      n.ch[AB].push_back({kAck, kNoCred, kE});
      n.e_injected = 1;
      n.linear_bad = 1;
      n.interfered = 1;
      add({.action = "inject", .channel = "s", .payload = "DSACK"}, std::move(n));
    }
    const Conn& ex = s.conn[1];
    if (s.e_port && ex.st == X_None) {
      State n = s;
      n.interfered = 1;
      if (n.port == P_Listening) {
        n.backlog.push_back(kE);
        n.conn[1].st = X_Pending;
        add({.action = "connect", .channel = "z"}, std::move(n));
      } else {
        n.conn[1].st = X_Reset;
        add({.action = "connect refused", .channel = "z"}, std::move(n));
      }
    }
    bool live = ex.st == X_Pending || ex.st == X_Accepted;
    if (secure() && live && !s.e_sent_cred) {
      State n = s;
      std::uint8_t atom = s.e_cred == kFresh ? kFresh : kGuessed;
      n.conn[1].up.push_back({kCred, atom, kE});
      n.e_sent_cred = 1;
      n.interfered = 1;
      add({.action = "send", .channel = "z", .payload = atom == kFresh ? "CRED (leaked)" : "CRED (guessed)"},
          std::move(n));
    }
    if (live && !s.e_sent_lm) {
      bool ready = !secure() || (!ex.down.empty() && ex.down.front().kind == kSuccess);
      if (ready) {
        State n = s;
        if (secure()) pop(n.conn[1].down);
        n.conn[1].up.push_back({kLm, kNoCred, kE});
        n.e_sent_lm = 1;
        n.interfered = 1;
        add({.action = "send", .channel = "z", .payload = "LM(forged)"}, std::move(n));
      }
    }
    if (caps.suppress) {
      for (int c = 0; c < 4; ++c) {
        if (s.ch[c].empty()) continue;
        State n = s;
        Msg m = pop(n.ch[c]);
        n.interfered = 1;
        add({.action = "suppress", .channel = kChName[c], .payload = kind_name(m.kind)}, std::move(n));
      }
    }
  }

  Succ expand(const State& s, bool honest_only) const {
    Succ out;
    passive(s, out);
    sender(s, out);
    receiver(s, out);
    if (p.attacker && !honest_only) attacker(s, out);
    return out;
  }
};

State initial_state(const ModelParams& p) {
  State s;
  for (int i = 0; i < p.k; ++i) s.ch[AB].push_back({kData, kNoCred, kA});
  return s;
}

bool all_finished(const State& s) { return s.a == A_Done && s.b == B_Done && s.c == C_Completed; }

RunOutcome classify(const State& s) {
  if (s.c == C_Completed) return s.c_peer == kE ? RunOutcome::Infiltrated : RunOutcome::Completed;
  if (s.c == C_Rejected) return RunOutcome::Blocked;
  return RunOutcome::Stuck;
}

bool violates(Property prop, const State& s, bool terminal) {
  switch (prop) {
    case Property::Freshness:
      return s.fresh_bad != 0;
    case Property::TernaryAuth:
      return (s.c == C_Completed && !s.check_passed) || (terminal && s.check_passed && s.c != C_Completed);
    case Property::Consistency:
      return s.c == C_Completed && !(s.c_peer == kA && s.lm_from_a);
    case Property::Liveness:
      return terminal && !s.interfered && !all_finished(s);
    case Property::Linearity:
      return s.linear_bad != 0;
    case Property::AttackerExclusion:
      return s.c == C_Completed && s.c_peer == kE;
  }
  return false;
}

WitnessStep to_step(const Move& m) {
  return WitnessStep{m.role, m.action, m.channel, m.payload, m.step, m.attacker};
}

/// Graph of reachable states discovered from the initial state, with the move
/// that first reached each one.
struct Graph {
  std::vector<State> states;
  std::vector<std::uint32_t> parent;
  std::vector<Move> via;
  std::unordered_map<std::string, std::uint32_t> index;

  std::pair<std::uint32_t, bool> intern(State s, std::uint32_t from, const Move& m, std::size_t bound) {
    auto key = s.key();
    auto it = index.find(key);
    if (it != index.end()) return {it->second, false};
    if (states.size() >= bound)
      throw Error(Errc::BoundExceeded, "more than " + std::to_string(bound) + " reachable states");
    auto id = static_cast<std::uint32_t>(states.size());
    index.emplace(std::move(key), id);
    states.push_back(std::move(s));
    parent.push_back(from);
    via.push_back(m);
    return {id, true};
  }

  std::vector<WitnessStep> trace_to(std::uint32_t id) const {
    std::vector<WitnessStep> out;
    while (id != 0) {
      out.push_back(to_step(via[id]));
      id = parent[id];
    }
    std::reverse(out.begin(), out.end());
    return out;
  }
};

/// Outcome reached by every run that continues from `s` without the attacker,
/// or nullopt when honest continuations disagree.
std::optional<RunOutcome> honest_outcome(const Expander& ex, const State& s) {
  std::set<RunOutcome> seen;
  std::unordered_map<std::string, bool> visited;
  std::vector<State> stack{s};
  while (!stack.empty()) {
    State cur = std::move(stack.back());
    stack.pop_back();
    if (!visited.emplace(cur.key(), true).second) continue;
    auto next = ex.expand(cur, true);
    if (next.empty()) seen.insert(classify(cur));
    for (auto& [m, n] : next) stack.push_back(std::move(n));
  }
  if (seen.size() == 1) return *seen.begin();
  return std::nullopt;
}

}  // namespace

std::string_view mode_name(ProtocolMode m) { return m == ProtocolMode::Secure ? "secure" : "original"; }

std::string_view property_name(Property p) {
  switch (p) {
    case Property::Freshness: return "Freshness";
    case Property::TernaryAuth: return "TernaryAuth";
    case Property::Consistency: return "Consistency";
    case Property::Liveness: return "Liveness";
    case Property::Linearity: return "Linearity";
    case Property::AttackerExclusion: return "AttackerExclusion";
  }
  return "?";
}

Property property_from_name(std::string_view name) {
  for (Property p : all_properties()) {
    auto n = property_name(p);
    if (n.size() == name.size() &&
        std::equal(n.begin(), n.end(), name.begin(), [](char a, char b) { return std::tolower(a) == std::tolower(b); }))
      return p;
  }
  throw Error(Errc::InvalidArgument, "unknown property '" + std::string(name) + "'");
}

const std::vector<Property>& all_properties() {
  static const std::vector<Property> v{Property::Freshness, Property::TernaryAuth, Property::Consistency,
                                       Property::Liveness,  Property::Linearity,   Property::AttackerExclusion};
  return v;
}

std::string_view outcome_name(RunOutcome o) {
  switch (o) {
    case RunOutcome::Completed: return "COMPLETED";
    case RunOutcome::Infiltrated: return "INFILTRATED";
    case RunOutcome::Blocked: return "BLOCKED";
    case RunOutcome::Stuck: return "STUCK";
  }
  return "?";
}

ProtocolModel::ProtocolModel(ModelParams p) : params_(p) {
  if (p.k < 0 || p.k > 2) throw Error(Errc::InvalidArgument, "k must be in 0..2");
  if (p.bound == 0) throw Error(Errc::InvalidArgument, "bound must be positive");
}

ExploreResult ProtocolModel::explore() const {
  Expander ex{params_};
  Graph g;
  g.intern(initial_state(params_), 0, Move{}, params_.bound);
  ExploreResult r;
  std::set<RunOutcome> outcomes;
  std::vector<std::uint32_t> stack{0};
  while (!stack.empty()) {
    std::uint32_t id = stack.back();
    stack.pop_back();
    auto next = ex.expand(g.states[id], false);
    r.transitions += next.size();
    if (next.empty()) {
      const State& s = g.states[id];
      ++r.terminal;
      outcomes.insert(classify(s));
      if (s.conn[1].st == X_Pending || s.conn[1].st == X_Accepted) ++r.attacker_connected;
      if (!all_finished(s)) {
        ++r.stuck;
        if (s.interfered) ++r.stuck_by_attacker;
        if (r.stuck_traces.size() < 16) r.stuck_traces.push_back(g.trace_to(id));
      }
      continue;
    }
    for (auto& [m, n] : next) {
      auto [nid, fresh] = g.intern(std::move(n), id, m, params_.bound);
      if (fresh) stack.push_back(nid);
    }
  }
  r.states = g.states.size();
  r.outcomes.assign(outcomes.begin(), outcomes.end());
  return r;
}

Verdict ProtocolModel::check(Property prop) const {
  Expander ex{params_};
  Graph g;
  g.intern(initial_state(params_), 0, Move{}, params_.bound);
  Verdict v;
  v.property = prop;
  std::deque<std::uint32_t> queue{0};
  while (!queue.empty()) {
    std::uint32_t id = queue.front();
    queue.pop_front();
    auto next = ex.expand(g.states[id], false);
    if (violates(prop, g.states[id], next.empty())) {
      v.holds = false;
      v.witness = g.trace_to(id);
      v.witness_outcome = honest_outcome(ex, g.states[id]);
      break;
    }
    for (auto& [m, n] : next) {
      auto [nid, fresh] = g.intern(std::move(n), id, m, params_.bound);
      if (fresh) queue.push_back(nid);
    }
  }
  v.states = g.states.size();
  return v;
}

std::vector<std::vector<WitnessStep>> ProtocolModel::maximal_traces(std::size_t limit) const {
  Expander ex{params_};
  std::vector<std::vector<WitnessStep>> out;
  std::vector<WitnessStep> path;
  std::function<void(const State&)> walk = [&](const State& s) {
    if (out.size() >= limit) return;
    auto next = ex.expand(s, true);
    if (next.empty()) {
      out.push_back(path);
      return;
    }
    for (auto& [m, n] : next) {
      path.push_back(to_step(m));
      walk(n);
      path.pop_back();
    }
  };
  walk(initial_state(params_));
  return out;
}

std::string verdict_to_text(const Verdict& v) {
  std::ostringstream os;
  os << property_name(v.property) << ": " << (v.holds ? "holds" : "VIOLATED") << " (" << v.states
     << " states explored)\n";
  if (!v.holds) {
    os << "  witness, " << v.witness.size() << " steps";
    if (v.witness_outcome) os << "; honest continuation ends " << outcome_name(*v.witness_outcome);
    os << "\n";
    std::size_t i = 1;
    for (const auto& s : v.witness) {
      os << "    " << i++ << ". " << s.role << "  " << s.action;
      if (!s.payload.empty()) os << " " << s.payload;
      if (!s.channel.empty()) os << "  [" << s.channel << "]";
      if (!s.step.empty()) os << "  step " << s.step;
      os << "\n";
    }
  }
  return os.str();
}

std::string verdicts_to_json(const ModelParams& p, const std::vector<Verdict>& vs) {
  nlohmann::json j;
  j["mode"] = std::string(mode_name(p.mode));
  j["attacker"] = p.attacker;
  j["k"] = p.k;
  j["leaked_credential"] = p.caps.leaked_credential;
  j["verdicts"] = nlohmann::json::array();
  for (const auto& v : vs) {
    nlohmann::json jv;
    jv["property"] = std::string(property_name(v.property));
    jv["holds"] = v.holds;
    jv["states"] = v.states;
    if (!v.holds) {
      jv["witness"] = nlohmann::json::array();
      for (const auto& s : v.witness)
        jv["witness"].push_back({{"role", s.role},
                                 {"action", s.action},
                                 {"channel", s.channel},
                                 {"payload", s.payload},
                                 {"step", s.step},
                                 {"attacker", s.attacker}});
      jv["outcome"] = v.witness_outcome ? std::string(outcome_name(*v.witness_outcome)) : std::string("AMBIGUOUS");
    }
    j["verdicts"].push_back(jv);
  }
  return j.dump(2);
}

}  // namespace sessec
