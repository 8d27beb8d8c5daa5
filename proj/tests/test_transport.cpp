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

#include <functional>
#include <random>
#include <thread>

#include "sessec/error.hpp"
#include "sessec/simnet.hpp"
#include "sessec/tcp.hpp"

namespace sessec {
namespace {

Frame data_frame(std::string_view s) { return Frame{FrameTag::Data, to_bytes(s)}; }

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::InvalidState;
}

TEST(FrameCodec, RoundTrip) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    Frame f;
    f.tag = static_cast<FrameTag>(1 + rng() % 10);
    f.payload.resize(rng() % 300);
    for (auto& b : f.payload) b = static_cast<std::uint8_t>(rng());
    Bytes wire = encode_frame(f);
    ASSERT_EQ(wire.size(), kFrameHeaderSize + f.payload.size());
    ASSERT_EQ(decode_frame(wire), f);
  }
}

TEST(FrameCodec, Header) {
  Bytes wire = encode_frame(data_frame("hi"));
  EXPECT_EQ(to_hex(wire), "010000026869");
}

TEST(FrameCodec, Errors) {
  Frame big{FrameTag::Data, Bytes(std::size_t{1} << 24)};
  EXPECT_EQ(code_of([&] { encode_frame(big); }), Errc::FrameTooLarge);
  EXPECT_EQ(code_of([] { decode_frame(from_hex("0000000100")); }), Errc::MalformedFrame);
  EXPECT_EQ(code_of([] { decode_frame(from_hex("0b00000100")); }), Errc::MalformedFrame);
  EXPECT_EQ(code_of([] { decode_frame(from_hex("01000002ff")); }), Errc::MalformedFrame);
  EXPECT_EQ(code_of([] { decode_frame(from_hex("01000000ff")); }), Errc::MalformedFrame);
  EXPECT_FALSE(is_valid_tag(0));
  EXPECT_TRUE(is_valid_tag(10));
  EXPECT_FALSE(is_valid_tag(11));
}

TEST(FrameCodec, IncrementalDecoder) {
  Bytes stream;
  for (const char* s : {"a", "", "hello"}) {
    Bytes w = encode_frame(data_frame(s));
    stream.insert(stream.end(), w.begin(), w.end());
  }
  FrameDecoder dec;
  std::vector<Frame> out;
  for (auto b : stream) {
    dec.feed(ByteView(&b, 1));
    while (auto f = dec.next()) out.push_back(*f);
  }
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[2], data_frame("hello"));
  EXPECT_EQ(out[1].payload.size(), 0u);
}

TEST(AddressTest, Parse) {
  auto a = Address::parse("sim://H:40000");
  EXPECT_TRUE(a.simulated);
  EXPECT_EQ(a.host, "H");
  EXPECT_EQ(a.port, 40000);
  EXPECT_EQ(a.to_string(), "sim://H:40000");
  auto b = Address::parse("127.0.0.1:8080");
  EXPECT_FALSE(b.simulated);
  EXPECT_EQ(b, Address::tcp("127.0.0.1", 8080));
  EXPECT_EQ(code_of([] { Address::parse("nohost"); }), Errc::InvalidArgument);
  EXPECT_EQ(code_of([] { Address::parse("h:99999"); }), Errc::InvalidArgument);
  EXPECT_EQ(code_of([] { Address::parse("h:1x"); }), Errc::InvalidArgument);
}

TEST(SimNet, ListenAssignsFreshPorts) {
  SimNetwork net(1);
  auto h = net.host("H");
  auto a1 = h->listen(h->local(0));
  auto a2 = h->listen(h->local(0));
  EXPECT_GT(a1->address().port, 0);
  EXPECT_NE(a1->address().port, a2->address().port);
  EXPECT_EQ(code_of([&] { h->listen(a1->address()); }), Errc::AddressInUse);
  EXPECT_EQ(net.listening("H").size(), 2u);
  a1->close();
  EXPECT_EQ(net.listening("H").size(), 1u);
}

TEST(SimNet, FifoAndClose) {
  SimNetwork net(5);
  auto a = net.host("A");
  auto b = net.host("B");
  std::shared_ptr<Acceptor> acc = b->listen(b->local(0));
  std::vector<std::string> got;
  Errc after_close = Errc::InvalidState;
  net.spawn("client", [&] {
    auto ch = a->connect(acc->address());
    ch->send(data_frame("x"));
    ch->send(data_frame("y"));
    ch->close();
  });
  net.spawn("server", [&] {
    auto ch = acc->accept();
    got.push_back(to_string(ch->recv().payload));
    got.push_back(to_string(ch->recv().payload));
    after_close = code_of([&] { ch->recv(); });
  });
  for (const auto& r : net.run()) EXPECT_FALSE(r.error) << r.name;
  EXPECT_EQ(got, (std::vector<std::string>{"x", "y"}));
  EXPECT_EQ(after_close, Errc::ChannelClosed);
}

TEST(SimNet, ConnectRefused) {
  SimNetwork net(1);
  auto a = net.host("A");
  EXPECT_EQ(code_of([&] { a->connect(Address::sim("B", 40000)); }), Errc::ConnectionRefused);
}

TEST(SimNet, DeadlockIsReported) {
  SimNetwork net(1);
  auto a = net.host("A");
  auto b = net.host("B");
  std::shared_ptr<Acceptor> acc = b->listen(b->local(0));
  net.spawn("client", [&] {
    auto ch = a->connect(acc->address());
    ch->recv();
  });
  net.spawn("server", [&] {
    auto ch = acc->accept();
    ch->recv();
  });
  auto reports = net.run();
  ASSERT_EQ(reports.size(), 2u);
  for (const auto& r : reports) {
    ASSERT_TRUE(r.error) << r.name;
    EXPECT_EQ(code_of([&] { std::rethrow_exception(r.error); }), Errc::Deadlock);
  }
}

TEST(SimNet, VirtualTimeout) {
  SimNetwork net(1);
  auto a = net.host("A");
  auto b = net.host("B");
  std::shared_ptr<Acceptor> acc = b->listen(b->local(0));
  Errc got = Errc::InvalidState;
  auto start = std::chrono::steady_clock::now();
  net.spawn("client", [&] {
    auto ch = a->connect(acc->address());
    got = code_of([&] { ch->recv_for(Millis(60'000)); });
  });
  net.spawn("server", [&] { auto ch = acc->accept(); ch->recv_for(Millis(120'000)); });
  net.run();
  EXPECT_EQ(got, Errc::Timeout);
  EXPECT_GE(net.now(), Millis(60'000));
  // Virtual time: a minute of simulated waiting takes no real minute.
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(5));
}

std::vector<std::string> ping_pong_trace(std::uint64_t seed, std::shared_ptr<AttackerTap> tap = nullptr) {
  SimNetwork net(seed);
  if (tap) net.attach_attacker(tap);
  auto a = net.host("A");
  auto b = net.host("B");
  std::shared_ptr<Acceptor> acc = b->listen(b->local(0));
  for (int c = 0; c < 3; ++c) {
    net.spawn("client" + std::to_string(c), [&, c] {
      auto ch = a->connect(acc->address());
      for (int i = 0; i < 4; ++i) {
        ch->send(data_frame("c" + std::to_string(c) + "-" + std::to_string(i)));
        ch->recv();
      }
      ch->close();
    });
  }
  net.spawn("server", [&] {
    std::vector<std::unique_ptr<Channel>> chans;
    for (int c = 0; c < 3; ++c) chans.push_back(acc->accept());
    for (int i = 0; i < 4; ++i)
      for (auto& ch : chans) ch->send(data_frame("ack:" + to_string(ch->recv().payload)));
  });
  for (const auto& r : net.run()) EXPECT_FALSE(r.error) << r.name;
  std::vector<std::string> out;
  for (const auto& e : net.trace()) out.push_back(e.from.to_string() + ">" + e.to.to_string() + ":" + to_hex(e.wire));
  return out;
}

class Passthrough : public AttackerTap {
 public:
  TapVerdict on_frame(const FrameEvent&, Frame&) override {
    ++seen;
    return TapVerdict::Forward;
  }
  int seen = 0;
};

TEST(SimNet, SameSeedSameTrace) {
  auto t1 = ping_pong_trace(42);
  EXPECT_EQ(t1, ping_pong_trace(42));
  // Transport-level closes are not frames.
  EXPECT_EQ(t1.size(), 24u);
  bool differs = false;
  for (std::uint64_t s = 1; s < 10 && !differs; ++s) differs = ping_pong_trace(s) != t1;
  EXPECT_TRUE(differs) << "seed has no effect on the interleaving";
}

TEST(SimNet, PassiveTapLeavesTraceUnchanged) {
  auto tap = std::make_shared<Passthrough>();
  EXPECT_EQ(ping_pong_trace(9, tap), ping_pong_trace(9));
  EXPECT_EQ(tap->seen, 24);
}

class FlipFirstData : public AttackerTap {
 public:
  TapVerdict on_frame(const FrameEvent&, Frame& f) override {
    if (f.tag == FrameTag::Data && !done) {
      done = true;
      if (suppress) return TapVerdict::Suppress;
      f.payload[0] ^= 1;
    }
    return TapVerdict::Forward;
  }
  bool suppress = false;
  bool done = false;
};

TEST(SimNet, TapRewritesAndSuppresses) {
  for (bool suppress : {false, true}) {
    SimNetwork net(1);
    auto tap = std::make_shared<FlipFirstData>();
    tap->suppress = suppress;
    net.attach_attacker(tap);
    auto a = net.host("A");
    auto b = net.host("B");
    std::shared_ptr<Acceptor> acc = b->listen(b->local(0));
    std::string got;
    net.spawn("client", [&] {
      auto ch = a->connect(acc->address());
      ch->send(data_frame("a"));
      ch->send(data_frame("b"));
      ch->close();
    });
    net.spawn("server", [&] {
      auto ch = acc->accept();
      got = to_string(ch->recv().payload);
    });
    for (const auto& r : net.run()) EXPECT_FALSE(r.error);
    EXPECT_EQ(got, suppress ? "b" : "`");
    auto tr = net.trace();
    EXPECT_EQ(tr.front().suppressed, suppress);
  }
}

class DropAll : public AttackerTap {
 public:
  TapVerdict on_frame(const FrameEvent&, Frame&) override { return TapVerdict::Suppress; }
};

TEST(SimNet, SuppressingEverythingBlocksBothParties) {
  SimNetwork net(1);
  net.attach_attacker(std::make_shared<DropAll>());
  auto a = net.host("A");
  auto b = net.host("B");
  std::shared_ptr<Acceptor> acc = b->listen(b->local(0));
  net.spawn("client", [&] {
    auto ch = a->connect(acc->address());
    ch->send(data_frame("hello"));
    ch->recv();
  });
  net.spawn("server", [&] {
    auto ch = acc->accept();
    ch->recv();
  });
  for (const auto& r : net.run()) {
    ASSERT_TRUE(r.error);
    EXPECT_EQ(code_of([&] { std::rethrow_exception(r.error); }), Errc::Deadlock);
  }
}

TEST(SimNet, InjectBypassesTap) {
  SimNetwork net(1);
  auto tap = std::make_shared<Passthrough>();
  net.attach_attacker(tap);
  auto a = net.host("A");
  auto b = net.host("B");
  std::shared_ptr<Acceptor> acc = b->listen(b->local(0));
  std::string got;
  std::uint64_t conn = 0;
  Address client_addr;
  net.spawn("client", [&] {
    auto ch = a->connect(acc->address());
    conn = ch->connection_id();
    client_addr = ch->local_address();
    net.inject(conn, client_addr, data_frame("forged"));
    ch->recv();
  });
  net.spawn("server", [&] {
    auto ch = acc->accept();
    got = to_string(ch->recv().payload);
    ch->send(data_frame("done"));
  });
  for (const auto& r : net.run()) EXPECT_FALSE(r.error);
  EXPECT_EQ(got, "forged");
  EXPECT_EQ(tap->seen, 1);
  auto tr = net.trace();
  ASSERT_EQ(tr.size(), 2u);
  EXPECT_TRUE(tr[0].injected);
}

TEST(SimNet, AcceptorCloseFailsPendingAccept) {
  SimNetwork net(1);
  auto b = net.host("B");
  std::shared_ptr<Acceptor> acc = b->listen(b->local(0));
  Errc got = Errc::InvalidState;
  net.spawn("acceptor", [&] { got = code_of([&] { acc->accept(); }); });
  net.spawn("closer", [&] { acc->close(); });
  net.run();
  EXPECT_EQ(got, Errc::ChannelClosed);
}

TEST(SimNet, PlainThreads) {
  SimNetwork net(1);
  auto a = net.host("A");
  auto b = net.host("B");
  auto acc = b->listen(b->local(0));
  std::thread server([&] {
    auto ch = acc->accept();
    ch->send(ch->recv());
  });
  auto ch = a->connect(acc->address());
  ch->send(data_frame("echo"));
  EXPECT_EQ(ch->recv_for(Millis(2000)), data_frame("echo"));
  server.join();
}

TEST(SimNet, AttachToTcpIsUnsupported) {
  TcpNetwork tcp;
  EXPECT_EQ(code_of([&] { attach_attacker(tcp, std::make_shared<DropAll>()); }), Errc::Unsupported);
}

TEST(Tcp, Loopback) {
  TcpNetwork net;
  auto acc = net.listen(Address::tcp("127.0.0.1", 0));
  ASSERT_GT(acc->address().port, 0);
  std::thread server([&] {
    auto ch = acc->accept_for(Millis(5000));
    for (;;) {
      Frame f;
      try {
        f = ch->recv_for(Millis(5000));
      } catch (const Error&) {
        break;
      }
      ch->send(f);
    }
  });
  auto ch = net.connect(acc->address());
  Frame big{FrameTag::Lm, Bytes(100'000, 0xab)};
  ch->send(data_frame("x"));
  ch->send(big);
  EXPECT_EQ(ch->recv_for(Millis(5000)), data_frame("x"));
  EXPECT_EQ(ch->recv_for(Millis(5000)), big);
  ch->close();
  server.join();
  EXPECT_EQ(code_of([&] { net.listen(Address::sim("H", 1)); }), Errc::InvalidArgument);
}

TEST(Tcp, RefusedAndTimeout) {
  TcpNetwork net;
  std::uint16_t port;
  {
    auto acc = net.listen(Address::tcp("127.0.0.1", 0));
    port = acc->address().port;
  }
  EXPECT_EQ(code_of([&] { net.connect(Address::tcp("127.0.0.1", port)); }), Errc::ConnectionRefused);
  auto acc = net.listen(Address::tcp("127.0.0.1", 0));
  EXPECT_EQ(code_of([&] { acc->accept_for(Millis(50)); }), Errc::Timeout);
  EXPECT_EQ(code_of([&] { net.listen(acc->address()); }), Errc::AddressInUse);
}

}  // namespace
}  // namespace sessec
