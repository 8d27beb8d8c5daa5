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

#include <gtest/gtest.h>

#include <fstream>
#include <functional>
#include <sstream>

#include "sessec/error.hpp"
#include "sessec/session_type.hpp"
#include "support.hpp"

namespace sessec {
namespace {

using testing::Rng;

MessageType base(const char* n) { return MessageType::base(n); }

std::string purchase_source() {
  std::ifstream in(std::string(SESSEC_DATA_DIR) + "/purchase.sj");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SessionType find(const std::vector<Protocol>& ps, const std::string& name) {
  for (const auto& p : ps)
    if (p.name == name) return p.type;
  ADD_FAILURE() << "no protocol " << name;
  return {};
}

class PurchaseProtocols : public ::testing::Test {
 protected:
  void SetUp() override { protocols = parse_protocols(purchase_source()); }
  std::vector<Protocol> protocols;
};

TEST_F(PurchaseProtocols, CustomerToVendorAst) {
  auto tail = SessionType::select({{"CHECKOUT", SessionType::send(base("CreditCard"), SessionType::recv(base("Receipt"), {}))},
                                   {"EXIT", SessionType::end()}});
  auto loop = SessionType::out_iter(SessionType::send(base("ProductId"), SessionType::recv(base("int"), {})), tail);
  auto expected = SessionType::begin(Side::Client, SessionType::recv(base("ProductList"), loop));
  EXPECT_EQ(find(protocols, "customerToVendor"), expected);
}

TEST_F(PurchaseProtocols, VendorToHandlerAst) {
  auto payload = SessionType::recv(base("CreditCard"), SessionType::send(base("Receipt"), {}));
  auto expected = SessionType::begin(Side::Client, SessionType::send(MessageType::session(payload), {}));
  EXPECT_EQ(find(protocols, "vendorToHandler"), expected);
}

TEST_F(PurchaseProtocols, PairsAreDual) {
  EXPECT_TRUE(is_dual(find(protocols, "customerToVendor"), find(protocols, "vendorToCustomer")));
  EXPECT_TRUE(is_dual(find(protocols, "vendorToHandler"), find(protocols, "handlerToVendor")));
  EXPECT_EQ(dual(find(protocols, "customerToVendor")), find(protocols, "vendorToCustomer"));
  EXPECT_EQ(dual(find(protocols, "vendorToHandler")), find(protocols, "handlerToVendor"));
  EXPECT_FALSE(is_dual(find(protocols, "customerToVendor"), find(protocols, "customerToVendor")));
}

TEST_F(PurchaseProtocols, RenderRoundTrip) {
  for (const auto& p : protocols) {
    EXPECT_EQ(parse_protocol(render_protocol(p.type, p.name)), p.type) << p.name;
    EXPECT_EQ(parse_type(render_type(p.type)), p.type) << p.name;
  }
}

TEST(SessionTypeParse, EmptyBody) {
  auto t = parse_protocol("protocol p { cbegin }");
  EXPECT_EQ(t, SessionType::begin(Side::Client, SessionType::end()));
  EXPECT_EQ(parse_protocol(render_protocol(t)), t);
  EXPECT_NE(render_protocol(t).find("cbegin"), std::string::npos);
}

TEST(SessionTypeParse, EndpointsOfEmptyProtocolsAreDual) {
  EXPECT_TRUE(is_dual(SessionType::begin(Side::Client, {}), SessionType::begin(Side::Server, {})));
  EXPECT_EQ(dual(SessionType::end()), SessionType::end());
}

TEST(SessionTypeParse, DuplicateLabel) {
  try {
    parse_protocol("protocol p { cbegin.!{ A: !<int>, A: } }");
    FAIL() << "expected DuplicateLabel";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DuplicateLabel);
  }
  EXPECT_THROW(SessionType::select({{"A", {}}, {"A", {}}}), Error);
}

TEST(SessionTypeParse, BeginOnlyAtRoot) {
  try {
    parse_protocol("protocol p { cbegin.!<int>.sbegin }");
    FAIL() << "expected BeginNotAtRoot";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::BeginNotAtRoot);
  }
  try {
    SessionType::send(MessageType::base("int"), SessionType::begin(Side::Server, {}));
    FAIL() << "expected BeginNotAtRoot";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::BeginNotAtRoot);
  }
}

TEST(SessionTypeParse, SyntaxErrorsCarryPosition) {
  for (const char* bad : {"protocol p { cbegin.!<int }", "protocol { cbegin }", "protocol p { cbegin.?(int)", "protocol p { cbegin.![!<int>] }"}) {
    try {
      parse_protocol(bad);
      ADD_FAILURE() << "parsed: " << bad;
    } catch (const SyntaxError& e) {
      EXPECT_GE(e.line(), 1) << bad;
    } catch (const Error& e) {
      ADD_FAILURE() << bad << ": " << e.what();
    }
  }
}

TEST(SessionTypeAdvance, Examples) {
  auto s = SessionType::send(base("int"), {});
  auto t = SessionType::recv(base("ProductList"), s);
  EXPECT_EQ(advance(t, CommEvent::received(base("ProductList"))), s);

  auto sel = SessionType::select({{"CHECKOUT", s}, {"EXIT", {}}});
  EXPECT_EQ(advance(sel, CommEvent::selected("EXIT")), SessionType::end());
  EXPECT_EQ(advance(sel, CommEvent::selected("CHECKOUT")), s);

  try {
    advance(s, CommEvent::received(base("int")));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::TypeMismatch);
  }
  EXPECT_THROW(advance(s, CommEvent::sent(base("bool"))), Error);
  EXPECT_THROW(advance(sel, CommEvent::selected("NOPE")), Error);
  EXPECT_EQ(advance(SessionType::end(), CommEvent::closed()), SessionType::end());
  EXPECT_THROW(advance(s, CommEvent::closed()), Error);
}

TEST(SessionTypeAdvance, IterationUnfoldsOnEntry) {
  auto body = SessionType::send(base("ProductId"), SessionType::recv(base("int"), {}));
  auto tail = SessionType::recv(base("Receipt"), {});
  auto loop = SessionType::out_iter(body, tail);
  auto t = loop;
  for (int i = 0; i < 2; ++i) {
    t = advance(t, CommEvent::iter_entered(Polarity::Out));
    t = advance(t, CommEvent::sent(base("ProductId")));
    t = advance(t, CommEvent::received(base("int")));
    EXPECT_EQ(t, loop);
  }
  EXPECT_EQ(advance(t, CommEvent::iter_exited(Polarity::Out)), tail);
  EXPECT_THROW(advance(loop, CommEvent::iter_entered(Polarity::In)), Error);
}

TEST(LostMessages, Examples) {
  auto x = SessionType::send(base("bool"), {});
  auto local = SessionType::recv(base("int"), x);
  EXPECT_EQ(lost_message_count(local, dual(local)), 0u);

  // The customer is past two ProductId sends that the vendor has not consumed.
  auto after = SessionType::recv(base("Receipt"), {});
  auto remote = SessionType::recv(base("ProductId"), SessionType::recv(base("ProductId"), dual(after)));
  EXPECT_EQ(lost_message_count(after, remote), 2u);

  try {
    lost_message_count(SessionType::send(base("int"), {}), SessionType::end());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InconsistentTypes);
  }
}

/// Length of the shortest run of input steps from `from` to `to`, by
/// enumerating every run up to `limit` steps.
std::size_t shortest_input_path(const SessionType& from, const SessionType& to, std::size_t limit) {
  std::function<bool(const SessionType&, std::size_t)> reach = [&](const SessionType& t, std::size_t left) {
    if (t == to) return true;
    if (left == 0) return false;
    using K = SessionType::Kind;
    switch (t.kind()) {
      case K::Recv:
        return reach(advance(t, CommEvent::received(t.message())), left - 1);
      case K::Offer:
        for (const auto& [l, b] : t.branches())
          if (reach(advance(t, CommEvent::offered(l)), left - 1)) return true;
        return false;
      case K::InIter:
        return reach(advance(t, CommEvent::iter_exited(Polarity::In)), left - 1) ||
               reach(advance(t, CommEvent::iter_entered(Polarity::In)), left - 1);
      default:
        return false;
    }
  };
  for (std::size_t n = 0; n <= limit; ++n)
    if (reach(from, n)) return n;
  return limit + 1;
}

// Brute-force oracle: replay the frames a sender emitted through a FIFO
// queue against the remote type, one receive per frame. The count must be
// the shortest input run, which is the replay length unless a loop lets
// the remote type repeat.
TEST(LostMessages, MatchesFifoOracle) {
  Rng rng(11);
  int exact = 0;
  for (int run = 0; run < 300; ++run) {
    SessionType start = testing::random_body(rng, 5, false);
    SessionType local = start;
    std::vector<CommEvent> sent;
    // Advance the local side through a prefix of output actions only.
    for (int step = 0; step < 4; ++step) {
      using K = SessionType::Kind;
      CommEvent e;
      if (local.kind() == K::Send) {
        e = CommEvent::sent(local.message());
      } else if (local.kind() == K::Select) {
        e = CommEvent::selected(local.branches()[rng() % local.branches().size()].first);
      } else if (local.kind() == K::OutIter) {
        e = rng() % 2 ? CommEvent::iter_entered(Polarity::Out) : CommEvent::iter_exited(Polarity::Out);
      } else {
        break;
      }
      local = advance(local, e);
      sent.push_back(e);
    }
    SessionType remote = dual(start);
    // Consuming the queue from the remote's side must land on dual(local).
    // Loops of pure outputs can pass through dual(local) earlier; the count
    // is the first point where the replay meets it.
    SessionType r = remote;
    std::optional<std::size_t> first = r == dual(local) ? std::optional<std::size_t>(0) : std::nullopt;
    for (std::size_t i = 0; i < sent.size(); ++i) {
      const CommEvent& e = sent[i];
      CommEvent in = e;
      in.polarity = Polarity::In;
      if (e.kind == CommEvent::Kind::Sent) in = CommEvent::received(*e.message);
      if (e.kind == CommEvent::Kind::Selected) in = CommEvent::offered(e.label);
      r = advance(r, in);
      if (!first && r == dual(local)) first = i + 1;
    }
    ASSERT_EQ(r, dual(local));
    ASSERT_TRUE(first);
    std::size_t n = lost_message_count(local, remote);
    EXPECT_LE(n, *first) << render_type(start);
    EXPECT_EQ(n, shortest_input_path(remote, dual(local), sent.size())) << render_type(start);
    if (n == sent.size()) ++exact;
  }
  EXPECT_GT(exact, 250);
}

TEST(SessionTypeProperties, RandomTypes) {
  Rng rng(2026);
  for (int i = 0; i < 1000; ++i) {
    SessionType t = testing::random_type(rng, 6);
    ASSERT_EQ(dual(dual(t)), t) << render_type(t);
    ASSERT_EQ(parse_type(render_type(t)), t) << render_type(t);
    ASSERT_EQ(parse_protocol(render_protocol(t)), t) << render_protocol(t);
    ASSERT_TRUE(is_dual(t, dual(t)));
    ASSERT_EQ(lost_message_count(t.body(), dual(t.body())), 0u);
  }
}

TEST(SessionTypeProperties, DualityPreservedByAdvance) {
  Rng rng(7);
  for (int i = 0; i < 500; ++i) {
    SessionType a = testing::random_body(rng, 6);
    SessionType b = dual(a);
    for (int step = 0; step < 6 && !a.is_end(); ++step) {
      using K = SessionType::Kind;
      CommEvent out, in;
      switch (a.kind()) {
        case K::Send: out = CommEvent::sent(a.message()); in = CommEvent::received(a.message()); break;
        case K::Recv: out = CommEvent::received(a.message()); in = CommEvent::sent(a.message()); break;
        case K::Select: {
          auto l = a.branches()[rng() % a.branches().size()].first;
          out = CommEvent::selected(l); in = CommEvent::offered(l); break;
        }
        case K::Offer: {
          auto l = a.branches()[rng() % a.branches().size()].first;
          out = CommEvent::offered(l); in = CommEvent::selected(l); break;
        }
        case K::OutIter:
        case K::InIter: {
          bool enter = rng() % 2;
          Polarity pa = a.kind() == K::OutIter ? Polarity::Out : Polarity::In;
          Polarity pb = pa == Polarity::Out ? Polarity::In : Polarity::Out;
          out = enter ? CommEvent::iter_entered(pa) : CommEvent::iter_exited(pa);
          in = enter ? CommEvent::iter_entered(pb) : CommEvent::iter_exited(pb);
          break;
        }
        default: break;
      }
      SessionType prev = a;
      a = advance(a, out);
      b = advance(b, in);
      ASSERT_TRUE(is_dual(a, b));
      // Only loop entry grows the type, and by exactly one unfolding.
      if (out.kind == CommEvent::Kind::IterEntered)
        ASSERT_EQ(a, concat(prev.body(), prev));
      else
        ASSERT_LT(a.size(), prev.size());
    }
  }
}

}  // namespace
}  // namespace sessec
