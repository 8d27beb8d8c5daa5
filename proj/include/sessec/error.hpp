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

#include <stdexcept>
#include <string>
#include <string_view>

namespace sessec {

enum class Errc {
  // session types
  SyntaxError,
  DuplicateLabel,
  BeginNotAtRoot,
  TypeMismatch,
  InconsistentTypes,
  // transport
  AddressInUse,
  ConnectionRefused,
  Timeout,
  ChannelClosed,
  FrameTooLarge,
  MalformedFrame,
  Unsupported,
  Deadlock,
  // srp
  AuthFailed,
  IllegalParameter,
  IntegrityFailure,
  EntropyFailure,
  // runtime
  NonDualPeer,
  UnknownLabel,
  PrematureClose,
  InvalidState,
  InvalidArgument,
  // delegation
  DelegationRefused,
  // model checker
  BoundExceeded,
};

std::string_view errc_name(Errc code) noexcept;

/// Single exception type for the library; callers switch on code().
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Parse failure with a source position (1-based).
class SyntaxError : public Error {
 public:
  SyntaxError(Errc code, int line, int column, const std::string& what)
      : Error(code, std::to_string(line) + ":" + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace sessec
