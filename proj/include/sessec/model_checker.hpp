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
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

// Bounded explicit-state exploration of the resending delegation protocol:
// passive party A, session-sender B, session-receiver C and an optional
// network attacker E, communicating over FIFO channels.
//
// Payloads are symbolic. A credential is an atom compared by identity; E can
// learn an atom only from a channel it can read, and the session channels are
// unreadable (and unforgeable) in secure mode.

namespace sessec {

enum class ProtocolMode { Original, Secure };

std::string_view mode_name(ProtocolMode m);

/// What the attacker may do.
struct AttackerCaps {
  /// Take the delegation signal off the wire and read it (plaintext channels only).
  bool intercept = true;
  /// Find the receiver's open port once a delegation signal has been seen on the wire.
  bool scan = true;
  /// Drop the head frame of a session channel.
  bool suppress = true;
  /// Forge the acknowledgement to the sender (plaintext channels only).
  bool inject = true;
  /// The credential reaches E out of band.
  bool leaked_credential = false;
};

struct ModelParams {
  ProtocolMode mode = ProtocolMode::Secure;
  bool attacker = false;
  /// Frames A sent that B has not consumed when delegation starts (0..2).
  int k = 0;
  AttackerCaps caps;
  std::size_t bound = 1'000'000;
};

enum class Property { Freshness, TernaryAuth, Consistency, Liveness, Linearity, AttackerExclusion };

std::string_view property_name(Property p);
/// Error(InvalidArgument) for an unknown name.
Property property_from_name(std::string_view name);
const std::vector<Property>& all_properties();

/// Outcome of a delegation run, judged at the session-receiver.
enum class RunOutcome { Completed, Infiltrated, Blocked, Stuck };

std::string_view outcome_name(RunOutcome o);

struct WitnessStep {
  std::string role;
  std::string action;
  std::string channel;
  std::string payload;
  /// Protocol step label, empty for internal or attacker moves.
  std::string step;
  bool attacker = false;
};

struct Verdict {
  Property property = Property::Liveness;
  bool holds = true;
  std::vector<WitnessStep> witness;
  /// Outcome every honest continuation of the witness reaches.
  std::optional<RunOutcome> witness_outcome;
  std::size_t states = 0;
};

struct ExploreResult {
  std::size_t states = 0;
  std::size_t transitions = 0;
  std::size_t terminal = 0;
  /// Terminal states where some honest role did not finish.
  std::size_t stuck = 0;
  /// ... of which the attacker had interfered.
  std::size_t stuck_by_attacker = 0;
  /// Terminal states where E still holds an open connection to the receiver.
  std::size_t attacker_connected = 0;
  std::vector<RunOutcome> outcomes;  // distinct, sorted
  /// One trace per stuck terminal state (up to a small cap).
  std::vector<std::vector<WitnessStep>> stuck_traces;
};

class ProtocolModel {
 public:
  /// Error(InvalidArgument) unless 0 <= k <= 2.
  explicit ProtocolModel(ModelParams p);

  const ModelParams& params() const { return params_; }

  /// Exhaustive depth-first exploration with visited-state hashing.
  /// Error(BoundExceeded) when more than params().bound states are reachable.
  ExploreResult explore() const;

  /// Breadth-first search for a violation; a failing verdict carries a
  /// shortest witness.
  Verdict check(Property p) const;

  /// Every maximal trace (no attacker moves are taken), up to `limit` traces.
  std::vector<std::vector<WitnessStep>> maximal_traces(std::size_t limit = 10'000) const;

  struct State;

 private:
  ModelParams params_;
};

std::string verdict_to_text(const Verdict& v);
std::string verdicts_to_json(const ModelParams& p, const std::vector<Verdict>& vs);

}  // namespace sessec
