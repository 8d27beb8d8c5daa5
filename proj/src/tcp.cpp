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

#include "sessec/tcp.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <mutex>
#include <optional>

#include "sessec/error.hpp"

namespace sessec {

namespace {

// Blocking calls poll in slices so that close() from another thread is noticed.
constexpr int kPollSliceMs = 50;

[[noreturn]] void throw_errno(Errc code, const std::string& what) {
  throw Error(code, what + ": " + std::strerror(errno));
}

sockaddr_in resolve(const Address& addr) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (int rc = ::getaddrinfo(addr.host.c_str(), nullptr, &hints, &res); rc != 0 || !res)
    throw Error(Errc::ConnectionRefused, "cannot resolve " + addr.host + ": " + ::gai_strerror(rc));
  sockaddr_in sa{};
  std::memcpy(&sa, res->ai_addr, sizeof sa);
  ::freeaddrinfo(res);
  sa.sin_port = htons(addr.port);
  return sa;
}

Address to_address(const sockaddr_in& sa) {
  char buf[INET_ADDRSTRLEN] = {};
  ::inet_ntop(AF_INET, &sa.sin_addr, buf, sizeof buf);
  return Address::tcp(buf, ntohs(sa.sin_port));
}

/// Waits for `events` on `fd`, giving up when `stop` is set or `deadline` passes.
/// Returns false on timeout.
bool wait_fd(int fd, short events, const std::atomic<bool>& stop,
             std::optional<std::chrono::steady_clock::time_point> deadline) {
  for (;;) {
    if (stop) return true;
    int slice = kPollSliceMs;
    if (deadline) {
      auto left = std::chrono::duration_cast<Millis>(*deadline - std::chrono::steady_clock::now()).count();
      if (left <= 0) return false;
      slice = static_cast<int>(std::min<long long>(left, kPollSliceMs));
    }
    pollfd p{fd, events, 0};
    int rc = ::poll(&p, 1, slice);
    if (rc > 0) return true;
    if (rc < 0 && errno != EINTR) throw_errno(Errc::ChannelClosed, "poll");
  }
}

class TcpEndpoint final : public Channel {
 public:
  explicit TcpEndpoint(int fd) : fd_(fd) {
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    sockaddr_in sa{};
    socklen_t len = sizeof sa;
    if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&sa), &len) == 0) local_ = to_address(sa);
    len = sizeof sa;
    if (::getpeername(fd_, reinterpret_cast<sockaddr*>(&sa), &len) == 0) peer_ = to_address(sa);
  }

  ~TcpEndpoint() override {
    close();
    ::close(fd_);
  }

  void send(const Frame& f) override {
    Bytes wire = encode_frame(f);
    std::lock_guard lk(send_mutex_);
    if (closed_) throw Error(Errc::ChannelClosed, "send on closed endpoint");
    std::size_t off = 0;
    while (off < wire.size()) {
      ssize_t n = ::send(fd_, wire.data() + off, wire.size() - off, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw_errno(Errc::ChannelClosed, "send");
      }
      off += static_cast<std::size_t>(n);
    }
  }

  Frame recv() override { return receive(std::nullopt); }
  Frame recv_for(Millis timeout) override { return receive(std::chrono::steady_clock::now() + timeout); }

  void close() override {
    if (closed_.exchange(true)) return;
    ::shutdown(fd_, SHUT_WR);
  }

  bool is_open() const override { return !closed_; }
  Address local_address() const override { return local_; }
  Address peer_address() const override { return peer_; }

 private:
  Frame receive(std::optional<std::chrono::steady_clock::time_point> deadline) {
    std::lock_guard lk(recv_mutex_);
    for (;;) {
      if (closed_) throw Error(Errc::ChannelClosed, "recv on closed endpoint");
      if (auto f = decoder_.next()) return std::move(*f);
      if (eof_) throw Error(Errc::ChannelClosed, "peer closed the connection");
      if (!wait_fd(fd_, POLLIN, closed_, deadline)) throw Error(Errc::Timeout, "recv timed out");
      if (closed_) continue;
      std::uint8_t buf[16384];
      ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        eof_ = true;
      } else if (n == 0) {
        eof_ = true;
      } else {
        decoder_.feed(ByteView(buf, static_cast<std::size_t>(n)));
      }
    }
  }

  int fd_;
  std::atomic<bool> closed_{false};
  std::mutex send_mutex_;
  std::mutex recv_mutex_;
  FrameDecoder decoder_;
  bool eof_ = false;
  Address local_;
  Address peer_;
};

class TcpAcceptor final : public Acceptor {
 public:
  TcpAcceptor(int fd, Address addr) : fd_(fd), addr_(std::move(addr)) {}
  ~TcpAcceptor() override {
    close();
    ::close(fd_);
  }

  std::unique_ptr<Channel> accept() override { return take(std::nullopt); }
  std::unique_ptr<Channel> accept_for(Millis timeout) override {
    return take(std::chrono::steady_clock::now() + timeout);
  }

  void close() override {
    if (closed_.exchange(true)) return;
    ::shutdown(fd_, SHUT_RDWR);
  }

  bool is_open() const override { return !closed_; }
  Address address() const override { return addr_; }

 private:
  std::unique_ptr<Channel> take(std::optional<std::chrono::steady_clock::time_point> deadline) {
    for (;;) {
      if (closed_) throw Error(Errc::ChannelClosed, "acceptor closed");
      if (!wait_fd(fd_, POLLIN, closed_, deadline)) throw Error(Errc::Timeout, "accept timed out");
      if (closed_) continue;
      int c = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC);
      if (c >= 0) return std::make_unique<TcpEndpoint>(c);
      if (errno != EINTR && errno != EAGAIN && errno != ECONNABORTED) throw_errno(Errc::ChannelClosed, "accept");
    }
  }

  int fd_;
  Address addr_;
  std::atomic<bool> closed_{false};
};

}  // namespace

TcpNetwork::TcpNetwork(std::string advertised_host, Millis connect_timeout)
    : advertised_host_(std::move(advertised_host)), connect_timeout_(connect_timeout) {}

std::unique_ptr<Acceptor> TcpNetwork::listen(const Address& addr) {
  if (addr.simulated) throw Error(Errc::InvalidArgument, "TCP network cannot bind " + addr.to_string());
  sockaddr_in sa = resolve(addr);
  int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) throw_errno(Errc::AddressInUse, "socket");
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0) {
    int err = errno;
    ::close(fd);
    errno = err;
    throw_errno(Errc::AddressInUse, "bind " + addr.to_string());
  }
  if (::listen(fd, 16) != 0) {
    ::close(fd);
    throw_errno(Errc::AddressInUse, "listen");
  }
  socklen_t len = sizeof sa;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&sa), &len);
  return std::make_unique<TcpAcceptor>(fd, Address::tcp(addr.host, ntohs(sa.sin_port)));
}

std::unique_ptr<Channel> TcpNetwork::connect(const Address& addr) {
  if (addr.simulated) throw Error(Errc::ConnectionRefused, "TCP network cannot reach " + addr.to_string());
  sockaddr_in sa = resolve(addr);
  int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC | SOCK_NONBLOCK, 0);
  if (fd < 0) throw_errno(Errc::ConnectionRefused, "socket");
  auto fail = [&](Errc code, const std::string& what) {
    int err = errno;
    ::close(fd);
    errno = err;
    throw_errno(code, what);
  };
  if (::connect(fd, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0) {
    if (errno != EINPROGRESS) fail(Errc::ConnectionRefused, "connect " + addr.to_string());
    pollfd p{fd, POLLOUT, 0};
    int rc = ::poll(&p, 1, static_cast<int>(connect_timeout_.count()));
    if (rc == 0) {
      ::close(fd);
      throw Error(Errc::Timeout, "connect " + addr.to_string());
    }
    int err = 0;
    socklen_t len = sizeof err;
    ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
    if (rc < 0 || err != 0) {
      if (err) errno = err;
      fail(Errc::ConnectionRefused, "connect " + addr.to_string());
    }
  }
  int flags = ::fcntl(fd, F_GETFL);
  ::fcntl(fd, F_SETFL, flags & ~O_NONBLOCK);
  return std::make_unique<TcpEndpoint>(fd);
}

Address TcpNetwork::local(std::uint16_t port) const { return Address::tcp(advertised_host_, port); }

}  // namespace sessec
