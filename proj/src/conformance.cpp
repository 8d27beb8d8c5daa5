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

#include "sessec/conformance.hpp"

#include <algorithm>
#include <map>

namespace sessec {

const StepOrder& secure_resending_order() {
  static const StepOrder order{
      "secure resending",
      {"1", "2", "3", "4", "5", "6", "7", "7'", "8", "9", "9'", "9a", "9a'", "10"},
      {{"1", "2"}, {"2", "3"}, {"3", "4"}, {"4", "5"}, {"5", "6"}, {"6", "7"}, {"6", "7'"}, {"7", "8"}, {"8", "9"},
       {"9", "9'"}, {"9'", "9a"}, {"9'", "9a'"}, {"9a", "10"}, {"9a'", "10"}}};
  return order;
}

const StepOrder& original_resending_order() {
  static const StepOrder order{"original resending",
                               {"1", "2", "3", "4", "5", "6", "6'", "7", "8"},
                               {{"1", "2"}, {"2", "3"}, {"3", "4"}, {"4", "5"}, {"5", "6"}, {"5", "6'"}, {"6", "7"},
                                {"7", "8"}}};
  return order;
}

std::vector<std::string> erase_to_steps(const std::vector<TranscriptEvent>& events) {
  std::vector<std::string> out;
  for (const auto& e : events)
    if (!e.step.empty()) out.push_back(e.step);
  return out;
}

ConformanceResult check_conformance(const std::vector<std::string>& observed, const StepOrder& order) {
  ConformanceResult res;
  std::map<std::string, std::vector<std::size_t>> positions;
  for (std::size_t i = 0; i < observed.size(); ++i) positions[observed[i]].push_back(i);
  auto fail = [&](std::string why) {
    res.ok = false;
    res.problems.push_back(std::move(why));
  };
  for (const auto& [label, at] : positions)
    if (std::find(order.steps.begin(), order.steps.end(), label) == order.steps.end())
      fail("step " + label + " is not part of the " + order.name + " protocol");
  for (const auto& s : order.steps) {
    auto it = positions.find(s);
    std::size_t n = it == positions.end() ? 0 : it->second.size();
    if (n != 1) fail("step " + s + " observed " + std::to_string(n) + " times");
  }
  if (!res.ok) return res;
  for (const auto& [a, b] : order.before)
    if (positions[a][0] > positions[b][0]) fail("step " + b + " observed before step " + a);
  return res;
}

}  // namespace sessec
