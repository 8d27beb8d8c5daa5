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

#include "sessec/bytes.hpp"

#include "sessec/error.hpp"

namespace sessec {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::SyntaxError: return "SyntaxError";
    case Errc::DuplicateLabel: return "DuplicateLabel";
    case Errc::BeginNotAtRoot: return "BeginNotAtRoot";
    case Errc::TypeMismatch: return "TypeMismatch";
    case Errc::InconsistentTypes: return "InconsistentTypes";
    case Errc::AddressInUse: return "AddressInUse";
    case Errc::ConnectionRefused: return "ConnectionRefused";
    case Errc::Timeout: return "Timeout";
    case Errc::ChannelClosed: return "ChannelClosed";
    case Errc::FrameTooLarge: return "FrameTooLarge";
    case Errc::MalformedFrame: return "MalformedFrame";
    case Errc::Unsupported: return "Unsupported";
    case Errc::Deadlock: return "Deadlock";
    case Errc::AuthFailed: return "AuthFailed";
    case Errc::IllegalParameter: return "IllegalParameter";
    case Errc::IntegrityFailure: return "IntegrityFailure";
    case Errc::EntropyFailure: return "EntropyFailure";
    case Errc::NonDualPeer: return "NonDualPeer";
    case Errc::UnknownLabel: return "UnknownLabel";
    case Errc::PrematureClose: return "PrematureClose";
    case Errc::InvalidState: return "InvalidState";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::DelegationRefused: return "DelegationRefused";
    case Errc::BoundExceeded: return "BoundExceeded";
  }
  return "Unknown";
}

Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

std::string to_string(ByteView b) { return std::string(b.begin(), b.end()); }

std::string to_hex(ByteView b) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(b.size() * 2);
  for (auto byte : b) {
    out.push_back(kDigits[byte >> 4]);
    out.push_back(kDigits[byte & 0x0f]);
  }
  return out;
}

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw Error(Errc::InvalidArgument, "odd-length hex string");
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    int hi = hex_value(hex[2 * i]);
    int lo = hex_value(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw Error(Errc::InvalidArgument, "bad hex digit");
    out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return out;
}

void ByteWriter::u16(std::uint16_t v) {
  out_.push_back(static_cast<std::uint8_t>(v >> 8));
  out_.push_back(static_cast<std::uint8_t>(v));
}

void ByteWriter::u24(std::uint32_t v) {
  out_.push_back(static_cast<std::uint8_t>(v >> 16));
  out_.push_back(static_cast<std::uint8_t>(v >> 8));
  out_.push_back(static_cast<std::uint8_t>(v));
}

void ByteWriter::u32(std::uint32_t v) {
  out_.push_back(static_cast<std::uint8_t>(v >> 24));
  u24(v & 0xffffff);
}

void ByteWriter::str8(std::string_view s) {
  if (s.size() > 0xff) throw Error(Errc::InvalidArgument, "string too long for 1-byte length");
  u8(static_cast<std::uint8_t>(s.size()));
  raw(s);
}

void ByteWriter::blob16(ByteView b) {
  if (b.size() > 0xffff) throw Error(Errc::InvalidArgument, "blob too long for 2-byte length");
  u16(static_cast<std::uint16_t>(b.size()));
  raw(b);
}

void ByteWriter::blob16(std::string_view s) {
  blob16(ByteView(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

ByteView ByteReader::raw(std::size_t n) {
  if (remaining() < n) throw Error(Errc::MalformedFrame, "truncated payload");
  auto view = in_.subspan(pos_, n);
  pos_ += n;
  return view;
}

std::uint8_t ByteReader::u8() { return raw(1)[0]; }

std::uint16_t ByteReader::u16() {
  auto b = raw(2);
  return static_cast<std::uint16_t>((b[0] << 8) | b[1]);
}

std::uint32_t ByteReader::u24() {
  auto b = raw(3);
  return (std::uint32_t{b[0]} << 16) | (std::uint32_t{b[1]} << 8) | b[2];
}

std::uint32_t ByteReader::u32() {
  auto b = raw(4);
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

std::string ByteReader::str8() {
  auto n = u8();
  return to_string(raw(n));
}

Bytes ByteReader::blob16() {
  auto n = u16();
  auto v = raw(n);
  return Bytes(v.begin(), v.end());
}

std::string ByteReader::str16() {
  auto n = u16();
  return to_string(raw(n));
}

ByteView ByteReader::rest() { return raw(remaining()); }

void ByteReader::expect_done() const {
  if (!done()) throw Error(Errc::MalformedFrame, "trailing bytes in payload");
}

}  // namespace sessec
