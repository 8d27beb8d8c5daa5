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

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sessec/delegation.hpp"
#include "sessec/model_checker.hpp"
#include "sessec/simnet.hpp"
#include "sessec/srp.hpp"
#include "sessec/transcript.hpp"

// Complete delegation runs over the simulated network or TCP: the online
// purchase (customer C, vendor V, payment handler H) and a parametric run in
// which the passive party A has k frames in flight when B delegates to C.

namespace sessec {

enum class TransportKind { Sim, Tcp };

/// What the attacker E does during a run on the simulated network.
struct AttackPlan {
  enum class Cred { None, Guessed, Leaked };

  /// Take the delegation signal off the wire and read the port from it (plaintext only).
  bool intercept_ds = false;
  /// Find the new port among the receiver's listeners once a delegation signal is on the wire.
  bool scan = false;
  /// Keep the delegation signal from the passive party until E has acted, then release it.
  bool hold_ds = false;
  /// Forge the passive party's acknowledgement to the sender.
  bool inject_dsack = false;
  bool connect = false;
  Cred cred = Cred::None;
  /// Send an empty lost-message batch, completing the receiver's side.
  bool send_lm = false;
  /// Drop the first frame with this tag on this channel ("s" or "s'") once delegation starts.
  std::vector<std::pair<std::string, FrameTag>> suppress;
};

struct ScenarioOptions {
  TransportKind transport = TransportKind::Sim;
  /// Credential-checking delegation over SRP-secured channels.
  bool secure = false;
  std::uint64_t seed = 1;
  Millis timeout{5000};
  /// Secure runs only; defaults to demo_registry().
  std::shared_ptr<const Registry> registry;
  /// Simulated network only.
  std::optional<AttackPlan> attack;
};

struct ScenarioReport {
  /// Judged at the session-receiver. A run without delegation that finishes
  /// cleanly is Completed.
  RunOutcome outcome = RunOutcome::Stuck;
  std::string reason;
  bool delegated = false;
  std::optional<DelegationStatus> sender_status;
  std::optional<DelegationStatus> receiver_status;
  /// Role that the receiver's migrated session ended up connected to.
  std::string receiver_peer;
  std::shared_ptr<Transcript> transcript;
  /// Role name -> error that ended it.
  std::map<std::string, std::string> errors;
  /// Values the passive party sent, in order.
  std::vector<std::string> prescribed;
  /// Values consumed at the sender, then at the receiver.
  std::vector<std::string> observed;
  /// Frame trace of the simulated network (empty on TCP).
  std::vector<TraceEntry> trace;
};

/// Customer adds `items` products, then checks out (delegating payment to H) or exits.
ScenarioReport run_purchase(const ScenarioOptions& opts, int items, bool checkout);

/// A sends one item, receives an ack, sends k more items and waits for a
/// receipt; B consumes the first item, then delegates the rest to C.
ScenarioReport run_lost_messages(const ScenarioOptions& opts, int k);

/// Registry with the demo accounts: loaded from data/demo_registry.txt when
/// present, else generated.
std::shared_ptr<const Registry> demo_registry();
/// Password of a demo account ("customer", "vendor", "eve").
std::string demo_password(const std::string& user);

/// Plans for the scripted purchase attack.
AttackPlan interception_attack(bool secure, bool leak_credential);

/// E's moves in a model witness, as a plan for the simulated network.
AttackPlan plan_from_witness(const std::vector<WitnessStep>& witness);

/// Runs run_lost_messages with the attacker following `witness`.
ScenarioReport replay_witness(const ModelParams& params, const Verdict& verdict, std::uint64_t seed = 1);

std::string report_to_text(const ScenarioReport& r);
std::string report_to_json(const ScenarioReport& r);

}  // namespace sessec
