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

#include "sessec/session_type.hpp"

#include <cctype>
#include <deque>
#include <set>

#include "sessec/error.hpp"

namespace sessec {

struct SessionType::Node {
  Kind kind = Kind::End;
  Side side = Side::Client;
  std::optional<MessageType> message;
  SessionType body;  // Begin body, loop body
  SessionType cont;  // Send/Recv/loop continuation
  Branches branches;
};

namespace {

void check_branches(const Branches& branches) {
  if (branches.empty()) throw Error(Errc::InvalidArgument, "branch set must be non-empty");
  std::set<std::string_view> seen;
  for (const auto& [label, type] : branches) {
    if (!seen.insert(label).second) throw Error(Errc::DuplicateLabel, "duplicate branch label '" + label + "'");
    if (type.contains_begin()) throw Error(Errc::BeginNotAtRoot, "begin inside branch '" + label + "'");
  }
}

void check_no_begin(const SessionType& t, const char* where) {
  if (t.contains_begin()) throw Error(Errc::BeginNotAtRoot, std::string("begin inside ") + where);
}

}  // namespace

SessionType::SessionType() = default;

SessionType SessionType::end() { return SessionType(); }

SessionType SessionType::begin(Side side, SessionType body) {
  check_no_begin(body, "begin body");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Begin;
  n->side = side;
  n->body = std::move(body);
  return SessionType(std::move(n));
}

SessionType SessionType::send(MessageType msg, SessionType cont) {
  check_no_begin(cont, "send continuation");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Send;
  n->message = std::move(msg);
  n->cont = std::move(cont);
  return SessionType(std::move(n));
}

SessionType SessionType::recv(MessageType msg, SessionType cont) {
  check_no_begin(cont, "receive continuation");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Recv;
  n->message = std::move(msg);
  n->cont = std::move(cont);
  return SessionType(std::move(n));
}

SessionType SessionType::select(Branches branches) {
  check_branches(branches);
  auto n = std::make_shared<Node>();
  n->kind = Kind::Select;
  n->branches = std::move(branches);
  return SessionType(std::move(n));
}

SessionType SessionType::offer(Branches branches) {
  check_branches(branches);
  auto n = std::make_shared<Node>();
  n->kind = Kind::Offer;
  n->branches = std::move(branches);
  return SessionType(std::move(n));
}

SessionType SessionType::out_iter(SessionType body, SessionType cont) {
  check_no_begin(body, "iteration body");
  check_no_begin(cont, "iteration continuation");
  auto n = std::make_shared<Node>();
  n->kind = Kind::OutIter;
  n->body = std::move(body);
  n->cont = std::move(cont);
  return SessionType(std::move(n));
}

SessionType SessionType::in_iter(SessionType body, SessionType cont) {
  check_no_begin(body, "iteration body");
  check_no_begin(cont, "iteration continuation");
  auto n = std::make_shared<Node>();
  n->kind = Kind::InIter;
  n->body = std::move(body);
  n->cont = std::move(cont);
  return SessionType(std::move(n));
}

SessionType::Kind SessionType::kind() const { return node_ ? node_->kind : Kind::End; }

bool SessionType::contains_begin() const {
  // Begin can only ever sit at a root; children are validated on construction.
  return kind() == Kind::Begin;
}

Side SessionType::side() const {
  if (kind() != Kind::Begin) throw Error(Errc::InvalidState, "side() on non-begin type");
  return node_->side;
}

const SessionType& SessionType::body() const {
  auto k = kind();
  if (k != Kind::Begin && k != Kind::OutIter && k != Kind::InIter)
    throw Error(Errc::InvalidState, "body() on type without a body");
  return node_->body;
}

const SessionType& SessionType::cont() const {
  auto k = kind();
  if (k != Kind::Send && k != Kind::Recv && k != Kind::OutIter && k != Kind::InIter)
    throw Error(Errc::InvalidState, "cont() on type without a continuation");
  return node_->cont;
}

const MessageType& SessionType::message() const {
  if (!node_ || !node_->message) throw Error(Errc::InvalidState, "message() on non-I/O type");
  return *node_->message;
}

const Branches& SessionType::branches() const {
  if (kind() != Kind::Select && kind() != Kind::Offer)
    throw Error(Errc::InvalidState, "branches() on non-branch type");
  return node_->branches;
}

const SessionType* SessionType::branch(std::string_view label) const {
  for (const auto& [l, t] : branches())
    if (l == label) return &t;
  return nullptr;
}

std::size_t SessionType::size() const {
  switch (kind()) {
    case Kind::End: return 1;
    case Kind::Begin: return 1 + body().size();
    case Kind::Send:
    case Kind::Recv: {
      std::size_t payload = message().is_session() ? message().delegated().size() : 1;
      return 1 + payload + cont().size();
    }
    case Kind::Select:
    case Kind::Offer: {
      std::size_t n = 1;
      for (const auto& [l, t] : branches()) n += t.size();
      return n;
    }
    case Kind::OutIter:
    case Kind::InIter: return 1 + body().size() + cont().size();
  }
  return 1;
}

bool operator==(const SessionType& a, const SessionType& b) {
  if (a.node_ == b.node_) return true;
  if (!a.node_ || !b.node_) return false;
  const auto& x = *a.node_;
  const auto& y = *b.node_;
  if (x.kind != y.kind) return false;
  switch (x.kind) {
    case SessionType::Kind::End: return true;
    case SessionType::Kind::Begin: return x.side == y.side && x.body == y.body;
    case SessionType::Kind::Send:
    case SessionType::Kind::Recv: return *x.message == *y.message && x.cont == y.cont;
    case SessionType::Kind::Select:
    case SessionType::Kind::Offer: return x.branches == y.branches;
    case SessionType::Kind::OutIter:
    case SessionType::Kind::InIter: return x.body == y.body && x.cont == y.cont;
  }
  return false;
}

MessageType MessageType::base(std::string name) {
  if (name.empty()) throw Error(Errc::InvalidArgument, "empty message type name");
  return MessageType(std::move(name));
}

MessageType MessageType::session(SessionType delegated) {
  check_no_begin(delegated, "delegated session type");
  if (delegated.is_end()) throw Error(Errc::InvalidArgument, "delegated session type must not be end");
  return MessageType(std::move(delegated));
}

const std::string& MessageType::name() const {
  if (is_session()) throw Error(Errc::InvalidState, "name() on a session message type");
  return std::get<std::string>(value_);
}

const SessionType& MessageType::delegated() const {
  if (!is_session()) throw Error(Errc::InvalidState, "delegated() on a base message type");
  return std::get<SessionType>(value_);
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

void render_seq(const SessionType& t, std::string& out);

void render_message(const MessageType& m, std::string& out) {
  if (m.is_session())
    render_seq(m.delegated(), out);
  else
    out += m.name();
}

void render_branches(const Branches& bs, std::string& out) {
  bool first = true;
  for (const auto& [label, body] : bs) {
    if (!first) out += ", ";
    first = false;
    out += label;
    out += ": ";
    render_seq(body, out);
  }
}

void render_seq(const SessionType& t, std::string& out) {
  using K = SessionType::Kind;
  const SessionType* cur = &t;
  bool first = true;
  while (!cur->is_end()) {
    if (!first) out += '.';
    first = false;
    switch (cur->kind()) {
      case K::Begin:
        out += cur->side() == Side::Client ? "cbegin" : "sbegin";
        cur = &cur->body();
        break;
      case K::Send:
        out += "!<";
        render_message(cur->message(), out);
        out += '>';
        cur = &cur->cont();
        break;
      case K::Recv:
        out += "?(";
        render_message(cur->message(), out);
        out += ')';
        cur = &cur->cont();
        break;
      case K::Select:
      case K::Offer:
        out += cur->kind() == K::Select ? "!{" : "?{";
        render_branches(cur->branches(), out);
        out += '}';
        return;
      case K::OutIter:
      case K::InIter:
        out += cur->kind() == K::OutIter ? "![" : "?[";
        render_seq(cur->body(), out);
        out += "]*";
        cur = &cur->cont();
        break;
      case K::End: return;
    }
  }
}

}  // namespace

std::string render_type(const SessionType& t) {
  std::string out;
  render_seq(t, out);
  return out;
}

std::string render_protocol(const SessionType& t, std::string_view name) {
  std::string out = "protocol ";
  out += name;
  out += " {\n  ";
  out += render_type(t);
  out += "\n}\n";
  return out;
}

std::string describe(const CommEvent& e) {
  auto pol = [&] { return e.polarity == Polarity::Out ? std::string("out") : std::string("in"); };
  switch (e.kind) {
    case CommEvent::Kind::Sent: return "sent " + (e.message->is_session() ? "<" + render_type(e.message->delegated()) + ">" : e.message->name());
    case CommEvent::Kind::Received: return "received " + (e.message->is_session() ? "<" + render_type(e.message->delegated()) + ">" : e.message->name());
    case CommEvent::Kind::Selected: return "selected " + e.label;
    case CommEvent::Kind::Offered: return "offered " + e.label;
    case CommEvent::Kind::IterEntered: return "iteration entered (" + pol() + ")";
    case CommEvent::Kind::IterExited: return "iteration exited (" + pol() + ")";
    case CommEvent::Kind::Closed: return "closed";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  std::vector<Protocol> file() {
    std::vector<Protocol> out;
    skip_ws();
    while (!at_eof()) {
      out.push_back(declaration());
      skip_ws();
    }
    return out;
  }

  SessionType bare() {
    auto t = root_seq();
    skip_ws();
    if (!at_eof()) fail("unexpected trailing input");
    return t;
  }

 private:
  Protocol declaration() {
    auto kw = ident();
    if (kw != "protocol") fail("expected 'protocol'", kw_line_, kw_col_);
    Protocol p;
    p.name = ident();
    expect('{');
    p.type = root_seq();
    expect('}');
    return p;
  }

  // A root sequence may open with cbegin/sbegin.
  SessionType root_seq() {
    skip_ws();
    if (peek_ident_is("cbegin") || peek_ident_is("sbegin")) {
      auto kw = ident();
      Side side = kw == "cbegin" ? Side::Client : Side::Server;
      SessionType body;
      skip_ws();
      if (peek() == '.') {
        advance_char();
        body = seq(/*required=*/true);
      }
      return SessionType::begin(side, body);
    }
    return seq(false);
  }

  // seq := ε | action ('.' action)*
  SessionType seq(bool required) {
    skip_ws();
    if (!required && at_seq_end()) return SessionType::end();
    struct Step {
      char kind;  // '!', '?', 'L' (out loop), 'l' (in loop), 'S' (select), 'O' (offer)
      std::optional<MessageType> msg;
      SessionType body;
      Branches branches;
    };
    std::vector<Step> steps;
    for (;;) {
      skip_ws();
      int line = line_, col = col_;
      if (peek_ident_is("cbegin") || peek_ident_is("sbegin"))
        throw SyntaxError(Errc::BeginNotAtRoot, line, col, "begin is only allowed at the start of a protocol");
      char c = peek();
      if (c != '!' && c != '?') fail("expected an action ('!' or '?')");
      bool out = c == '!';
      advance_char();
      skip_ws();
      char d = peek();
      Step step;
      if (out && d == '<') {
        advance_char();
        step.kind = '!';
        step.msg = message();
        expect('>');
      } else if (!out && d == '(') {
        advance_char();
        step.kind = '?';
        step.msg = message();
        expect(')');
      } else if (d == '[') {
        advance_char();
        step.kind = out ? 'L' : 'l';
        step.body = seq(false);
        expect(']');
        expect('*');
      } else if (d == '{') {
        advance_char();
        step.kind = out ? 'S' : 'O';
        step.branches = branches(line, col);
        expect('}');
      } else {
        fail(out ? "expected '<', '[' or '{' after '!'" : "expected '(', '[' or '{' after '?'");
      }
      bool is_branch = step.kind == 'S' || step.kind == 'O';
      steps.push_back(std::move(step));
      skip_ws();
      if (peek() == '.') {
        if (is_branch) fail("a branch must be the final action of a sequence");
        advance_char();
        continue;
      }
      break;
    }
    SessionType t;
    for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
      switch (it->kind) {
        case '!': t = SessionType::send(std::move(*it->msg), t); break;
        case '?': t = SessionType::recv(std::move(*it->msg), t); break;
        case 'L': t = SessionType::out_iter(it->body, t); break;
        case 'l': t = SessionType::in_iter(it->body, t); break;
        case 'S': t = SessionType::select(std::move(it->branches)); break;
        case 'O': t = SessionType::offer(std::move(it->branches)); break;
      }
    }
    return t;
  }

  MessageType message() {
    skip_ws();
    char c = peek();
    if (c == '!' || c == '?') {
      int line = line_, col = col_;
      auto t = seq(true);
      if (t.is_end()) fail("empty delegated session type", line, col);
      return MessageType::session(t);
    }
    int line = line_, col = col_;
    auto name = ident();
    if (name == "cbegin" || name == "sbegin")
      throw SyntaxError(Errc::BeginNotAtRoot, line, col, "begin is not allowed inside a message type");
    return MessageType::base(std::move(name));
  }

  Branches branches(int line, int col) {
    Branches out;
    std::set<std::string> seen;
    for (;;) {
      skip_ws();
      if (peek() == '}') break;
      int lline = line_, lcol = col_;
      auto label = ident();
      if (!seen.insert(label).second)
        throw SyntaxError(Errc::DuplicateLabel, lline, lcol, "duplicate branch label '" + label + "'");
      expect(':');
      auto body = seq(false);
      out.emplace_back(std::move(label), std::move(body));
      skip_ws();
      if (peek() == ',') {
        advance_char();
        continue;
      }
      break;
    }
    if (out.empty()) fail("branch set must be non-empty", line, col);
    return out;
  }

  std::string ident() {
    skip_ws();
    kw_line_ = line_;
    kw_col_ = col_;
    if (at_eof() || !(std::isalpha(static_cast<unsigned char>(peek())) || peek() == '_')) fail("expected identifier");
    std::string out;
    while (!at_eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) {
      out.push_back(peek());
      advance_char();
    }
    return out;
  }

  bool peek_ident_is(std::string_view word) const {
    if (src_.substr(pos_, word.size()) != word) return false;
    std::size_t after = pos_ + word.size();
    return after >= src_.size() || !(std::isalnum(static_cast<unsigned char>(src_[after])) || src_[after] == '_');
  }

  bool at_seq_end() const {
    if (at_eof()) return true;
    char c = peek();
    return c == '}' || c == ']' || c == ',' || c == '>' || c == ')';
  }

  void expect(char c) {
    skip_ws();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    advance_char();
  }

  void skip_ws() {
    while (!at_eof()) {
      char c = peek();
      if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
        while (!at_eof() && peek() != '\n') advance_char();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance_char();
      } else {
        break;
      }
    }
  }

  bool at_eof() const { return pos_ >= src_.size(); }
  char peek() const { return at_eof() ? '\0' : src_[pos_]; }

  void advance_char() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  [[noreturn]] void fail(const std::string& msg) const { fail(msg, line_, col_); }
  [[noreturn]] void fail(const std::string& msg, int line, int col) const {
    std::string found = at_eof() ? "end of input" : std::string("'") + peek() + "'";
    throw SyntaxError(Errc::SyntaxError, line, col, msg + " (found " + found + ")");
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
  int kw_line_ = 1;
  int kw_col_ = 1;
};

}  // namespace

std::vector<Protocol> parse_protocols(std::string_view source) { return Parser(source).file(); }

SessionType parse_protocol(std::string_view source) {
  auto all = parse_protocols(source);
  if (all.size() != 1)
    throw SyntaxError(Errc::SyntaxError, 1, 1, "expected exactly one protocol declaration, found " + std::to_string(all.size()));
  return all.front().type;
}

SessionType parse_type(std::string_view text) { return Parser(text).bare(); }

// ---------------------------------------------------------------------------
// Duality, composition, stepping

SessionType dual(const SessionType& t) {
  using K = SessionType::Kind;
  auto flip_branches = [](const Branches& bs) {
    Branches out;
    out.reserve(bs.size());
    for (const auto& [l, b] : bs) out.emplace_back(l, dual(b));
    return out;
  };
  switch (t.kind()) {
    case K::End: return t;
    case K::Begin: return SessionType::begin(t.side() == Side::Client ? Side::Server : Side::Client, dual(t.body()));
    case K::Send: return SessionType::recv(t.message(), dual(t.cont()));
    case K::Recv: return SessionType::send(t.message(), dual(t.cont()));
    case K::Select: return SessionType::offer(flip_branches(t.branches()));
    case K::Offer: return SessionType::select(flip_branches(t.branches()));
    case K::OutIter: return SessionType::in_iter(dual(t.body()), dual(t.cont()));
    case K::InIter: return SessionType::out_iter(dual(t.body()), dual(t.cont()));
  }
  return t;
}

bool is_dual(const SessionType& a, const SessionType& b) { return b == dual(a); }

SessionType concat(const SessionType& t, const SessionType& next) {
  using K = SessionType::Kind;
  auto cat_branches = [&](const Branches& bs) {
    Branches out;
    out.reserve(bs.size());
    for (const auto& [l, b] : bs) out.emplace_back(l, concat(b, next));
    return out;
  };
  switch (t.kind()) {
    case K::End: return next;
    case K::Begin: return SessionType::begin(t.side(), concat(t.body(), next));
    case K::Send: return SessionType::send(t.message(), concat(t.cont(), next));
    case K::Recv: return SessionType::recv(t.message(), concat(t.cont(), next));
    case K::Select: return SessionType::select(cat_branches(t.branches()));
    case K::Offer: return SessionType::offer(cat_branches(t.branches()));
    case K::OutIter: return SessionType::out_iter(t.body(), concat(t.cont(), next));
    case K::InIter: return SessionType::in_iter(t.body(), concat(t.cont(), next));
  }
  return t;
}

namespace {

std::string head_name(const SessionType& t) {
  using K = SessionType::Kind;
  switch (t.kind()) {
    case K::End: return "end";
    case K::Begin: return "begin";
    case K::Send: return "!<" + (t.message().is_session() ? render_type(t.message().delegated()) : t.message().name()) + ">";
    case K::Recv: return "?(" + (t.message().is_session() ? render_type(t.message().delegated()) : t.message().name()) + ")";
    case K::Select: return "!{...}";
    case K::Offer: return "?{...}";
    case K::OutIter: return "![...]*";
    case K::InIter: return "?[...]*";
  }
  return "?";
}

[[noreturn]] void mismatch(const SessionType& t, const CommEvent& e) {
  throw Error(Errc::TypeMismatch, "expected " + head_name(t) + ", got " + describe(e));
}

}  // namespace

SessionType advance(const SessionType& t, const CommEvent& e) {
  using K = SessionType::Kind;
  using E = CommEvent::Kind;
  switch (t.kind()) {
    case K::End:
      if (e.kind == E::Closed) return t;
      break;
    case K::Begin:
      break;
    case K::Send:
      if (e.kind == E::Sent && e.message && *e.message == t.message()) return t.cont();
      break;
    case K::Recv:
      if (e.kind == E::Received && e.message && *e.message == t.message()) return t.cont();
      break;
    case K::Select:
    case K::Offer: {
      E want = t.kind() == K::Select ? E::Selected : E::Offered;
      if (e.kind == want) {
        if (const auto* b = t.branch(e.label)) return *b;
      }
      break;
    }
    case K::OutIter:
    case K::InIter: {
      Polarity want = t.kind() == K::OutIter ? Polarity::Out : Polarity::In;
      if (e.polarity == want) {
        if (e.kind == E::IterEntered) return concat(t.body(), t);
        if (e.kind == E::IterExited) return t.cont();
      }
      break;
    }
  }
  mismatch(t, e);
}

std::size_t lost_message_count(const SessionType& local_remaining, const SessionType& remote_remaining) {
  // Breadth-first search over the remote's input moves; the shortest bridge wins.
  constexpr std::size_t kMaxDepth = 64;
  const SessionType target = dual(local_remaining);
  std::vector<SessionType> frontier{remote_remaining};
  for (std::size_t depth = 0; depth <= kMaxDepth && !frontier.empty(); ++depth) {
    std::vector<SessionType> next;
    for (const auto& t : frontier) {
      if (t == target) return depth;
      using K = SessionType::Kind;
      switch (t.kind()) {
        case K::Recv: next.push_back(t.cont()); break;
        case K::Offer:
          for (const auto& [l, b] : t.branches()) next.push_back(b);
          break;
        case K::InIter:
          next.push_back(concat(t.body(), t));
          next.push_back(t.cont());
          break;
        default: break;
      }
    }
    frontier = std::move(next);
  }
  throw Error(Errc::InconsistentTypes, "remote type " + render_type(remote_remaining) +
                                           " cannot reach the dual of " + render_type(local_remaining) +
                                           " through input steps");
}

const SessionType& strip_begin(const SessionType& t) {
  return t.kind() == SessionType::Kind::Begin ? t.body() : t;
}

}  // namespace sessec
