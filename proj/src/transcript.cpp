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

#include "sessec/transcript.hpp"

#include <cstdio>
#include <json.hpp>

namespace sessec {

void Transcript::record(std::string role, std::string action, std::string channel, std::string step,
                        std::string detail) {
  std::lock_guard lk(mutex_);
  events_.push_back({events_.size() + 1, std::move(role), std::move(action), std::move(channel), std::move(step),
                     std::move(detail)});
}

std::vector<TranscriptEvent> Transcript::events() const {
  std::lock_guard lk(mutex_);
  return events_;
}

std::vector<TranscriptEvent> Transcript::project(const std::string& role) const {
  std::vector<TranscriptEvent> out;
  for (auto& e : events())
    if (e.role == role) out.push_back(e);
  return out;
}

std::string Transcript::to_text() const {
  std::string out;
  for (const auto& e : events()) {
    char head[32];
    std::snprintf(head, sizeof head, "%4zu  ", e.index);
    out += head;
    out += e.role;
    out += std::string(e.role.size() < 3 ? 3 - e.role.size() : 1, ' ');
    out += e.action;
    if (!e.channel.empty()) out += "  [" + e.channel + "]";
    if (!e.step.empty()) out += "  step " + e.step;
    if (!e.detail.empty()) out += "  (" + e.detail + ")";
    out += '\n';
  }
  return out;
}

std::string Transcript::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : events()) {
    nlohmann::json j{{"index", e.index}, {"role", e.role}, {"action", e.action}, {"channel", e.channel}};
    if (!e.step.empty()) j["step"] = e.step;
    if (!e.detail.empty()) j["detail"] = e.detail;
    arr.push_back(std::move(j));
  }
  return arr.dump();
}

}  // namespace sessec
