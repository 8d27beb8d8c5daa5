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

#include <charconv>

#include "sessec/error.hpp"
#include "sessec/transport.hpp"

namespace sessec {

std::string_view tag_name(FrameTag tag) {
  switch (tag) {
    case FrameTag::Data: return "DATA";
    case FrameTag::Branch: return "BRANCH";
    case FrameTag::Iter: return "ITER";
    case FrameTag::Close: return "CLOSE";
    case FrameTag::StartDelegation: return "START_DELEGATION";
    case FrameTag::Port: return "PORT";
    case FrameTag::Ds: return "DS";
    case FrameTag::DsAck: return "DSACK";
    case FrameTag::Cred: return "CRED";
    case FrameTag::Lm: return "LM";
  }
  return "?";
}

bool is_valid_tag(std::uint8_t byte) { return byte >= 1 && byte <= 10; }

Bytes encode_frame(const Frame& f) {
  if (f.payload.size() > kMaxFramePayload)
    throw Error(Errc::FrameTooLarge, std::to_string(f.payload.size()) + " byte payload");
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(f.tag));
  w.u24(static_cast<std::uint32_t>(f.payload.size()));
  w.raw(f.payload);
  return std::move(w).take();
}

Frame decode_frame(ByteView wire) {
  ByteReader r(wire);
  auto tag = r.u8();
  if (!is_valid_tag(tag)) throw Error(Errc::MalformedFrame, "unknown frame tag " + std::to_string(tag));
  auto len = r.u24();
  auto body = r.raw(len);
  r.expect_done();
  return Frame{static_cast<FrameTag>(tag), Bytes(body.begin(), body.end())};
}

void FrameDecoder::feed(ByteView chunk) {
  if (offset_ > 0 && offset_ == buffer_.size()) {
    buffer_.clear();
    offset_ = 0;
  }
  buffer_.insert(buffer_.end(), chunk.begin(), chunk.end());
}

std::optional<Frame> FrameDecoder::next() {
  std::size_t avail = buffer_.size() - offset_;
  if (avail < kFrameHeaderSize) return std::nullopt;
  const auto* p = buffer_.data() + offset_;
  if (!is_valid_tag(p[0])) throw Error(Errc::MalformedFrame, "unknown frame tag " + std::to_string(p[0]));
  std::size_t len = (std::size_t{p[1]} << 16) | (std::size_t{p[2]} << 8) | p[3];
  if (avail < kFrameHeaderSize + len) return std::nullopt;
  Frame f{static_cast<FrameTag>(p[0]), Bytes(p + kFrameHeaderSize, p + kFrameHeaderSize + len)};
  offset_ += kFrameHeaderSize + len;
  return f;
}

Address Address::parse(std::string_view text) {
  Address a;
  constexpr std::string_view kSim = "sim://";
  if (text.substr(0, kSim.size()) == kSim) {
    a.simulated = true;
    text.remove_prefix(kSim.size());
  }
  auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0)
    throw Error(Errc::InvalidArgument, "address must be host:port, got '" + std::string(text) + "'");
  a.host = std::string(text.substr(0, colon));
  auto port_text = text.substr(colon + 1);
  unsigned value = 0;
  auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), value);
  if (ec != std::errc() || ptr != port_text.data() + port_text.size() || value > 0xffff)
    throw Error(Errc::InvalidArgument, "bad port in '" + std::string(text) + "'");
  a.port = static_cast<std::uint16_t>(value);
  return a;
}

std::string Address::to_string() const {
  return (simulated ? "sim://" : "") + host + ":" + std::to_string(port);
}

}  // namespace sessec
