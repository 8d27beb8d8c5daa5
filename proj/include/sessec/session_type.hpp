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

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace sessec {

enum class Side { Client, Server };

/// Direction of an action relative to the local endpoint.
enum class Polarity { Out, In };

class MessageType;
class SessionType;

using Branches = std::vector<std::pair<std::string, SessionType>>;

/// Immutable session type tree. Copies share structure; safe to pass between threads.
///
/// Constructors validate the structural invariants: Begin only at the root,
/// non-empty duplicate-free branch sets, Begin-free delegated payloads.
class SessionType {
 public:
  enum class Kind { Begin, Send, Recv, Select, Offer, OutIter, InIter, End };

  struct Node;

  /// Default-constructed value is End.
  SessionType();

  static SessionType end();
  static SessionType begin(Side side, SessionType body);
  static SessionType send(MessageType msg, SessionType cont);
  static SessionType recv(MessageType msg, SessionType cont);
  static SessionType select(Branches branches);
  static SessionType offer(Branches branches);
  static SessionType out_iter(SessionType body, SessionType cont);
  static SessionType in_iter(SessionType body, SessionType cont);

  Kind kind() const;
  bool is_end() const { return kind() == Kind::End; }
  bool contains_begin() const;

  // Accessors throw Error(InvalidState) when called on the wrong kind.
  Side side() const;
  const SessionType& body() const;
  const SessionType& cont() const;
  const MessageType& message() const;
  const Branches& branches() const;
  const SessionType* branch(std::string_view label) const;

  /// Node count, counting shared subtrees once per occurrence.
  std::size_t size() const;

  friend bool operator==(const SessionType& a, const SessionType& b);
  friend bool operator!=(const SessionType& a, const SessionType& b) { return !(a == b); }

 private:
  explicit SessionType(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  // Null for End.
  std::shared_ptr<const Node> node_;
};

/// Either an opaque base type compared by name, or a delegated session type.
class MessageType {
 public:
  static MessageType base(std::string name);
  static MessageType session(SessionType delegated);

  bool is_session() const { return std::holds_alternative<SessionType>(value_); }
  const std::string& name() const;
  const SessionType& delegated() const;

  friend bool operator==(const MessageType& a, const MessageType& b) { return a.value_ == b.value_; }
  friend bool operator!=(const MessageType& a, const MessageType& b) { return !(a == b); }

 private:
  explicit MessageType(std::variant<std::string, SessionType> v) : value_(std::move(v)) {}

  std::variant<std::string, SessionType> value_;
};

/// One observed communication action, the unit the monitor advances on.
struct CommEvent {
  enum class Kind { Sent, Received, Selected, Offered, IterEntered, IterExited, Closed };

  Kind kind = Kind::Closed;
  std::optional<MessageType> message;
  std::string label;
  Polarity polarity = Polarity::Out;

  static CommEvent sent(MessageType m) { return {Kind::Sent, std::move(m), {}, Polarity::Out}; }
  static CommEvent received(MessageType m) { return {Kind::Received, std::move(m), {}, Polarity::In}; }
  static CommEvent selected(std::string l) { return {Kind::Selected, std::nullopt, std::move(l), Polarity::Out}; }
  static CommEvent offered(std::string l) { return {Kind::Offered, std::nullopt, std::move(l), Polarity::In}; }
  static CommEvent iter_entered(Polarity p) { return {Kind::IterEntered, std::nullopt, {}, p}; }
  static CommEvent iter_exited(Polarity p) { return {Kind::IterExited, std::nullopt, {}, p}; }
  static CommEvent closed() { return {}; }
};

std::string describe(const CommEvent& e);

struct Protocol {
  std::string name;
  SessionType type;
};

/// Parses every `protocol <name> { ... }` declaration in a source file.
std::vector<Protocol> parse_protocols(std::string_view source);

/// Parses a source holding exactly one declaration.
SessionType parse_protocol(std::string_view source);

/// Parses a bare type body such as `cbegin.?(int)` (used on the wire).
SessionType parse_type(std::string_view text);

/// Compact single-line rendering; parse_type(render_type(t)) == t.
std::string render_type(const SessionType& t);
std::string render_protocol(const SessionType& t, std::string_view name = "p");

SessionType dual(const SessionType& t);
bool is_dual(const SessionType& a, const SessionType& b);

/// Sequential composition: every End leaf of `t` (outside delegated payloads
/// and loop bodies) is replaced by `next`.
SessionType concat(const SessionType& t, const SessionType& next);

/// Monitor stepping relation. Throws Error(TypeMismatch) when `e` does not
/// match the head of `t`.
SessionType advance(const SessionType& t, const CommEvent& e);

/// Number of input actions the remote endpoint still has to perform before its
/// remaining type equals dual(local_remaining): the count of frames the local
/// party sent that were never consumed. Throws Error(InconsistentTypes) if no
/// run of consecutive input steps bridges the two. The shortest bridge is
/// returned; a loop whose body is all outputs makes longer ones possible.
std::size_t lost_message_count(const SessionType& local_remaining, const SessionType& remote_remaining);

/// Strips a root Begin, returning the body (or `t` itself if there is none).
const SessionType& strip_begin(const SessionType& t);

}  // namespace sessec
