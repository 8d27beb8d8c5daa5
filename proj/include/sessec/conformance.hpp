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

#include <string>
#include <utility>
#include <vector>

#include "sessec/transcript.hpp"

namespace sessec {

/// A numbered protocol listing as a partial order over step labels.
struct StepOrder {
  std::string name;
  std::vector<std::string> steps;
  /// (a, b): step a must be observed before step b.
  std::vector<std::pair<std::string, std::string>> before;
};

/// Resending protocol with credential checking: 1..10 with 7/7' and 9a/9a' unordered.
const StepOrder& secure_resending_order();
/// Original resending protocol: 1..8 with 6/6' unordered.
const StepOrder& original_resending_order();

struct ConformanceResult {
  bool ok = true;
  std::vector<std::string> problems;
};

/// Keeps only the step labels of a transcript, in log order.
std::vector<std::string> erase_to_steps(const std::vector<TranscriptEvent>& events);

/// Every step must occur exactly once, no foreign step may occur, and every
/// ordering constraint must hold.
ConformanceResult check_conformance(const std::vector<std::string>& observed, const StepOrder& order);

}  // namespace sessec
