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
#include <mutex>
#include <string>
#include <vector>

namespace sessec {

/// One line of a run transcript. `step` names the delegation protocol step the
/// event realizes ("1", "7'", "9a", ...) or is empty for ordinary traffic.
struct TranscriptEvent {
  std::size_t index = 0;
  std::string role;
  std::string action;
  std::string channel;
  std::string step;
  std::string detail;

  friend bool operator==(const TranscriptEvent&, const TranscriptEvent&) = default;
};

/// Thread-safe append-only event log shared by the roles of one run.
/// Events that cause a transmission are recorded before the transmission, so
/// the log order respects causality across roles.
class Transcript {
 public:
  void record(std::string role, std::string action, std::string channel, std::string step = {},
              std::string detail = {});

  std::vector<TranscriptEvent> events() const;
  /// Events of one role, in order.
  std::vector<TranscriptEvent> project(const std::string& role) const;

  std::string to_text() const;
  std::string to_json() const;

 private:
  mutable std::mutex mutex_;
  std::vector<TranscriptEvent> events_;
};

}  // namespace sessec
