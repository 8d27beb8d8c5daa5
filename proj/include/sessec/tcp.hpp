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

#include <memory>
#include <string>

#include "sessec/transport.hpp"

namespace sessec {

/// Abstract Transport over TCP sockets. Provides no security of its own.
class TcpNetwork final : public Network {
 public:
  /// `advertised_host` is the address peers are told to reach this host at.
  explicit TcpNetwork(std::string advertised_host = "127.0.0.1", Millis connect_timeout = Millis(5000));

  std::unique_ptr<Acceptor> listen(const Address& addr) override;
  std::unique_ptr<Channel> connect(const Address& addr) override;
  Address local(std::uint16_t port) const override;

 private:
  std::string advertised_host_;
  Millis connect_timeout_;
};

}  // namespace sessec
