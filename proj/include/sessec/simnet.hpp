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
#include <exception>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sessec/transport.hpp"

namespace sessec {

/// Where a frame travels: connection id plus the two endpoint addresses.
struct FrameEvent {
  std::uint64_t connection = 0;
  Address from;
  Address to;
};

enum class TapVerdict { Forward, Suppress };

/// Network attacker policy. Observes every frame sent on the simulated
/// network; may rewrite it in place or suppress it. Active moves (connecting,
/// injecting) are made from an ordinary simulation task.
///
/// on_frame runs with the network lock held and must not call back into the
/// network. State it shares with attacker tasks is read through
/// SimNetwork::wait_until predicates, which run under the same lock.
class AttackerTap {
 public:
  virtual ~AttackerTap() = default;
  virtual TapVerdict on_frame(const FrameEvent& ev, Frame& frame) = 0;
};

struct TraceEntry {
  std::uint64_t index = 0;
  std::uint64_t connection = 0;
  Address from;
  Address to;
  Bytes wire;
  bool suppressed = false;
  bool injected = false;
};

struct TaskReport {
  std::string name;
  std::exception_ptr error;
};

/// Deterministic in-memory network.
///
/// Code may drive endpoints from plain threads (real-time blocking), or run as
/// tasks spawned on the network. Tasks execute one at a time; at every send,
/// connect, close and blocking point the scheduler hands control to a ready
/// task chosen by a seeded PRNG, so a seed fixes the whole interleaving.
/// Timeouts of tasks run on a virtual clock that only advances when every task
/// is blocked; if no task is runnable and none has a deadline, the blocked
/// tasks fail with Error(Deadlock).
class SimNetwork {
 public:
  struct State;

  explicit SimNetwork(std::uint64_t seed = 0);
  ~SimNetwork();
  SimNetwork(const SimNetwork&) = delete;
  SimNetwork& operator=(const SimNetwork&) = delete;

  /// Network handle for one node; addresses are sim://<node>:<port>.
  std::shared_ptr<Network> host(const std::string& node);

  void spawn(std::string name, std::function<void()> fn);
  /// Runs spawned tasks until all finish. Exceptions escaping a task are
  /// captured in its report.
  std::vector<TaskReport> run();

  void attach_attacker(std::shared_ptr<AttackerTap> tap);

  /// Delivers `frame` on `connection` as if sent from `as_from`, bypassing the tap.
  void inject(std::uint64_t connection, const Address& as_from, Frame frame);

  /// Blocks the calling task (or thread) until `ready` holds; evaluated under the network lock.
  void wait_until(const std::function<bool()>& ready, std::optional<Millis> timeout = std::nullopt);

  /// Open listeners on `node` (the view of a port scanner).
  std::vector<Address> listening(const std::string& node) const;

  std::vector<TraceEntry> trace() const;
  Millis now() const;

 private:
  std::shared_ptr<State> state_;
};

/// Installs `tap` if `net` is a simulated host; Error(Unsupported) otherwise.
void attach_attacker(Network& net, std::shared_ptr<AttackerTap> tap);

}  // namespace sessec
