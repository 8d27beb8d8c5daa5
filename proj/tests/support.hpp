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

// Shared helpers for the test suites and the acceptance binary.

#include <algorithm>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "sessec/session.hpp"
#include "sessec/session_type.hpp"
#include "sessec/simnet.hpp"

namespace sessec::testing {

using Rng = std::mt19937_64;

inline const std::vector<std::string>& base_names() {
  static const std::vector<std::string> names{"int", "string", "bool", "ProductId", "Receipt", "CreditCard"};
  return names;
}

inline Branches random_branches(Rng& rng, int depth, bool sessions);

/// Random Begin-free type of depth at most `depth`. Delegated payloads only
/// when `sessions` is set.
inline SessionType random_body(Rng& rng, int depth, bool sessions = true) {
  if (depth <= 0) return SessionType::end();
  auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<unsigned>(n)); };
  auto message = [&]() {
    if (sessions && depth > 1 && pick(6) == 0) {
      SessionType payload = random_body(rng, depth - 1, sessions);
      // A delegated session cannot be finished already.
      if (payload.is_end()) payload = SessionType::recv(MessageType::base("int"), {});
      return MessageType::session(payload);
    }
    return MessageType::base(base_names()[pick(static_cast<int>(base_names().size()))]);
  };
  switch (pick(8)) {
    case 0:
      return SessionType::end();
    case 1:
    case 2: {
      auto m = message();
      return SessionType::send(std::move(m), random_body(rng, depth - 1, sessions));
    }
    case 3:
    case 4: {
      auto m = message();
      return SessionType::recv(std::move(m), random_body(rng, depth - 1, sessions));
    }
    case 5:
      return pick(2) ? SessionType::select(random_branches(rng, depth, sessions))
                     : SessionType::offer(random_branches(rng, depth, sessions));
    default: {
      auto body = random_body(rng, depth - 1, sessions);
      auto cont = random_body(rng, depth - 1, sessions);
      return pick(2) ? SessionType::out_iter(std::move(body), std::move(cont))
                     : SessionType::in_iter(std::move(body), std::move(cont));
    }
  }
}

inline Branches random_branches(Rng& rng, int depth, bool sessions) {
  static const std::vector<std::string> labels{"OK", "QUIT", "CHECKOUT", "EXIT", "MORE"};
  std::vector<std::string> pool = labels;
  std::shuffle(pool.begin(), pool.end(), rng);
  std::size_t n = 1 + rng() % 3;
  Branches out;
  for (std::size_t i = 0; i < n; ++i) out.emplace_back(pool[i], random_body(rng, depth - 1, sessions));
  return out;
}

inline SessionType random_type(Rng& rng, int depth, bool sessions = true) {
  return SessionType::begin(rng() % 2 ? Side::Client : Side::Server, random_body(rng, depth - 1, sessions));
}

struct TrafficStats {
  std::size_t delivered = 0;
  std::size_t mismatched = 0;
};

/// Walks `t` on `s`, making random choices for selections and loops (at most
/// two rounds per loop).
inline void drive(Session& s, const SessionType& t, Rng& rng, TrafficStats& st) {
  using K = SessionType::Kind;
  switch (t.kind()) {
    case K::Begin:
      drive(s, t.body(), rng, st);
      return;
    case K::End:
      return;
    case K::Send:
      s.send_value(TypedValue::of(t.message().name(), "v" + std::to_string(rng() % 100)));
      drive(s, t.cont(), rng, st);
      return;
    case K::Recv: {
      auto v = s.recv_value();
      ++st.delivered;
      if (v.type_name != t.message().name()) ++st.mismatched;
      drive(s, t.cont(), rng, st);
      return;
    }
    case K::Select: {
      const auto& b = t.branches()[rng() % t.branches().size()];
      s.select_label(b.first);
      drive(s, b.second, rng, st);
      return;
    }
    case K::Offer: {
      auto label = s.offer_labels();
      const SessionType* next = t.branch(label);
      if (!next) {
        ++st.mismatched;
        return;
      }
      drive(s, *next, rng, st);
      return;
    }
    case K::OutIter: {
      int rounds = static_cast<int>(rng() % 3);
      for (int i = 0; i < rounds; ++i) {
        s.iter_continue(true);
        drive(s, t.body(), rng, st);
      }
      s.iter_continue(false);
      drive(s, t.cont(), rng, st);
      return;
    }
    case K::InIter:
      while (s.iter_follow()) drive(s, t.body(), rng, st);
      drive(s, t.cont(), rng, st);
      return;
  }
}

/// One random dual-session run on a fresh simulated network. Returns the
/// statistics of both endpoints; task errors are rethrown.
inline TrafficStats run_random_traffic(std::uint64_t seed, int depth = 6) {
  Rng rng(seed);
  SessionType body = random_body(rng, depth - 1, false);
  SessionType client = SessionType::begin(Side::Client, body);
  SessionType server = dual(client);

  SimNetwork net(seed);
  auto a = net.host("a");
  auto b = net.host("b");
  std::shared_ptr<Acceptor> acc = b->listen(b->local(0));
  Address addr = acc->address();
  TrafficStats cs, ss;
  Rng crng(seed * 2 + 1), srng(seed * 2 + 2);
  net.spawn("client", [&] {
    SessionConfig cfg;
    cfg.network = a;
    auto s = request_session(*a, addr, client, cfg);
    drive(*s, body, crng, cs);
    s->close();
  });
  net.spawn("server", [&] {
    SessionConfig cfg;
    cfg.network = b;
    auto s = accept_session(*acc, server, cfg);
    drive(*s, server.body(), srng, ss);
    s->close();
  });
  for (const auto& r : net.run())
    if (r.error) std::rethrow_exception(r.error);
  return {cs.delivered + ss.delivered, cs.mismatched + ss.mismatched};
}

}  // namespace sessec::testing
