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

#include "sessec/simnet.hpp"

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <random>
#include <thread>

#include "sessec/error.hpp"

namespace sessec {

namespace {

constexpr std::uint16_t kFirstListenPort = 40000;
constexpr std::uint16_t kFirstEphemeralPort = 50000;

struct Pipe {
  std::deque<Frame> queue;
  bool writer_closed = false;
  bool reader_closed = false;
};

struct Connection {
  Address addr[2];
  Pipe pipe[2];  // pipe[i] carries frames sent by side i
};

struct Listener {
  Address addr;
  std::deque<std::uint64_t> backlog;
  bool open = true;
};

enum class TaskState { Ready, Blocked, Done };

struct Task {
  std::string name;
  std::function<void()> fn;
  std::thread thread;
  TaskState state = TaskState::Ready;
  std::function<bool()> ready;
  std::optional<Millis> deadline;
  bool timed_out = false;
  bool deadlocked = false;
  bool cancelled = false;
  std::exception_ptr error;
};

}  // namespace

struct SimNetwork::State {
  mutable std::mutex mutex;
  std::condition_variable cv;
  std::mt19937_64 rng;

  std::map<std::uint64_t, Connection> connections;
  std::uint64_t next_connection = 1;
  std::map<std::string, std::map<std::uint16_t, std::shared_ptr<Listener>>> listeners;
  std::map<std::string, std::uint16_t> next_listen_port;
  std::map<std::string, std::uint16_t> next_ephemeral_port;

  std::shared_ptr<AttackerTap> tap;
  std::vector<TraceEntry> trace;

  std::vector<std::unique_ptr<Task>> tasks;
  Task* running = nullptr;
  Millis now{0};

  explicit State(std::uint64_t seed) : rng(seed) {}

  // --- scheduler; every member below expects `mutex` to be held ---

  Task* current() const;
  void schedule_next();
  void switch_away(std::unique_lock<std::mutex>& lk, Task* self);
  void yield(std::unique_lock<std::mutex>& lk);
  void block_until(std::unique_lock<std::mutex>& lk, const std::function<bool()>& ready, std::optional<Millis> timeout);
  bool all_done() const;
};

namespace {

thread_local SimNetwork::State* tl_state = nullptr;
thread_local Task* tl_task = nullptr;

}  // namespace

Task* SimNetwork::State::current() const { return tl_state == this ? tl_task : nullptr; }

bool SimNetwork::State::all_done() const {
  return std::all_of(tasks.begin(), tasks.end(), [](const auto& t) { return t->state == TaskState::Done; });
}

void SimNetwork::State::schedule_next() {
  std::vector<Task*> runnable;
  for (auto& t : tasks) {
    if (t->state == TaskState::Ready || (t->state == TaskState::Blocked && t->ready())) runnable.push_back(t.get());
  }
  auto resume = [&](Task* t) {
    t->state = TaskState::Ready;
    t->ready = nullptr;
    t->deadline.reset();
    running = t;
    cv.notify_all();
  };
  if (!runnable.empty()) {
    resume(runnable[rng() % runnable.size()]);
    return;
  }
  Task* soonest = nullptr;
  for (auto& t : tasks) {
    if (t->state == TaskState::Blocked && t->deadline && (!soonest || *t->deadline < *soonest->deadline))
      soonest = t.get();
  }
  if (soonest) {
    now = std::max(now, *soonest->deadline);
    soonest->timed_out = true;
    resume(soonest);
    return;
  }
  Task* first_blocked = nullptr;
  for (auto& t : tasks) {
    if (t->state == TaskState::Blocked) {
      t->deadlocked = true;
      t->state = TaskState::Ready;
      t->ready = nullptr;
      if (!first_blocked) first_blocked = t.get();
    }
  }
  running = first_blocked;
  cv.notify_all();
}

void SimNetwork::State::switch_away(std::unique_lock<std::mutex>& lk, Task* self) {
  schedule_next();
  cv.wait(lk, [&] { return running == self; });
}

void SimNetwork::State::yield(std::unique_lock<std::mutex>& lk) {
  if (Task* self = current()) {
    self->state = TaskState::Ready;
    switch_away(lk, self);
  }
}

void SimNetwork::State::block_until(std::unique_lock<std::mutex>& lk, const std::function<bool()>& ready,
                                    std::optional<Millis> timeout) {
  Task* self = current();
  if (!self) {
    if (timeout) {
      if (!cv.wait_for(lk, *timeout, ready)) throw Error(Errc::Timeout, "timed out");
    } else {
      cv.wait(lk, ready);
    }
    return;
  }
  if (ready()) return;
  self->state = TaskState::Blocked;
  self->ready = ready;
  self->deadline = timeout ? std::optional<Millis>(now + *timeout) : std::nullopt;
  switch_away(lk, self);
  if (self->deadlocked) {
    self->deadlocked = false;
    throw Error(Errc::Deadlock, "task '" + self->name + "' blocked with no runnable peer");
  }
  if (self->timed_out) {
    self->timed_out = false;
    throw Error(Errc::Timeout, "timed out (virtual clock)");
  }
}

// ---------------------------------------------------------------------------

namespace {

class SimEndpoint final : public Channel {
 public:
  SimEndpoint(std::shared_ptr<SimNetwork::State> s, std::uint64_t id, int side)
      : s_(std::move(s)), id_(id), side_(side) {}
  ~SimEndpoint() override { close(); }

  void send(const Frame& f) override {
    if (f.payload.size() > kMaxFramePayload)
      throw Error(Errc::FrameTooLarge, std::to_string(f.payload.size()) + " byte payload");
    std::unique_lock lk(s_->mutex);
    if (closed_) throw Error(Errc::ChannelClosed, "send on closed endpoint");
    auto& conn = s_->connections.at(id_);
    auto& pipe = conn.pipe[side_];
    if (pipe.reader_closed) throw Error(Errc::ChannelClosed, "peer closed the connection");
    Frame copy = f;
    FrameEvent ev{id_, conn.addr[side_], conn.addr[1 - side_]};
    TapVerdict verdict = s_->tap ? s_->tap->on_frame(ev, copy) : TapVerdict::Forward;
    TraceEntry entry{s_->trace.size(), id_, ev.from, ev.to, encode_frame(copy), verdict == TapVerdict::Suppress, false};
    s_->trace.push_back(std::move(entry));
    if (verdict == TapVerdict::Forward) pipe.queue.push_back(std::move(copy));
    s_->cv.notify_all();
    s_->yield(lk);
  }

  Frame recv() override { return receive(std::nullopt); }
  Frame recv_for(Millis timeout) override { return receive(timeout); }

  void close() override {
    std::unique_lock lk(s_->mutex);
    if (closed_) return;
    closed_ = true;
    auto& conn = s_->connections.at(id_);
    conn.pipe[side_].writer_closed = true;
    conn.pipe[1 - side_].reader_closed = true;
    conn.pipe[1 - side_].queue.clear();
    s_->cv.notify_all();
    s_->yield(lk);
  }

  bool is_open() const override {
    std::lock_guard lk(s_->mutex);
    return !closed_;
  }

  Address local_address() const override {
    std::lock_guard lk(s_->mutex);
    return s_->connections.at(id_).addr[side_];
  }

  Address peer_address() const override {
    std::lock_guard lk(s_->mutex);
    return s_->connections.at(id_).addr[1 - side_];
  }

  std::uint64_t connection_id() const override { return id_; }

 private:
  Frame receive(std::optional<Millis> timeout) {
    std::unique_lock lk(s_->mutex);
    if (closed_) throw Error(Errc::ChannelClosed, "recv on closed endpoint");
    auto& pipe = s_->connections.at(id_).pipe[1 - side_];
    s_->block_until(lk, [&] { return !pipe.queue.empty() || pipe.writer_closed || closed_; }, timeout);
    if (pipe.queue.empty()) throw Error(Errc::ChannelClosed, "peer closed the connection");
    Frame f = std::move(pipe.queue.front());
    pipe.queue.pop_front();
    return f;
  }

  std::shared_ptr<SimNetwork::State> s_;
  std::uint64_t id_;
  int side_;
  bool closed_ = false;  // guarded by s_->mutex
};

class SimAcceptor final : public Acceptor {
 public:
  SimAcceptor(std::shared_ptr<SimNetwork::State> s, std::shared_ptr<Listener> l) : s_(std::move(s)), l_(std::move(l)) {}
  ~SimAcceptor() override { close(); }

  std::unique_ptr<Channel> accept() override { return take(std::nullopt); }
  std::unique_ptr<Channel> accept_for(Millis timeout) override { return take(timeout); }

  void close() override {
    std::unique_lock lk(s_->mutex);
    if (!l_->open) return;
    l_->open = false;
    s_->listeners[l_->addr.host].erase(l_->addr.port);
    for (auto id : l_->backlog) {
      auto& conn = s_->connections.at(id);
      conn.pipe[1].writer_closed = true;
      conn.pipe[0].reader_closed = true;
      conn.pipe[0].queue.clear();
    }
    l_->backlog.clear();
    s_->cv.notify_all();
    s_->yield(lk);
  }

  bool is_open() const override {
    std::lock_guard lk(s_->mutex);
    return l_->open;
  }

  Address address() const override { return l_->addr; }

 private:
  std::unique_ptr<Channel> take(std::optional<Millis> timeout) {
    std::unique_lock lk(s_->mutex);
    s_->block_until(lk, [&] { return !l_->backlog.empty() || !l_->open; }, timeout);
    if (!l_->open) throw Error(Errc::ChannelClosed, "acceptor closed");
    auto id = l_->backlog.front();
    l_->backlog.pop_front();
    return std::make_unique<SimEndpoint>(s_, id, 1);
  }

  std::shared_ptr<SimNetwork::State> s_;
  std::shared_ptr<Listener> l_;
};

class SimHost final : public Network {
 public:
  SimHost(std::shared_ptr<SimNetwork::State> s, SimNetwork* owner, std::string node)
      : s_(std::move(s)), owner_(owner), node_(std::move(node)) {}

  std::unique_ptr<Acceptor> listen(const Address& addr) override {
    if (!addr.simulated || addr.host != node_)
      throw Error(Errc::InvalidArgument, "node " + node_ + " cannot listen on " + addr.to_string());
    std::unique_lock lk(s_->mutex);
    auto& table = s_->listeners[node_];
    std::uint16_t port = addr.port;
    if (port == 0) {
      auto [it, fresh] = s_->next_listen_port.try_emplace(node_, kFirstListenPort);
      while (table.count(it->second)) ++it->second;
      port = it->second++;
    } else if (table.count(port)) {
      throw Error(Errc::AddressInUse, addr.to_string());
    }
    auto l = std::make_shared<Listener>();
    l->addr = Address::sim(node_, port);
    table[port] = l;
    s_->cv.notify_all();
    s_->yield(lk);
    return std::make_unique<SimAcceptor>(s_, std::move(l));
  }

  std::unique_ptr<Channel> connect(const Address& addr) override {
    std::unique_lock lk(s_->mutex);
    auto node_it = s_->listeners.find(addr.host);
    if (!addr.simulated || node_it == s_->listeners.end() || !node_it->second.count(addr.port)) {
      s_->yield(lk);
      throw Error(Errc::ConnectionRefused, addr.to_string());
    }
    auto& listener = *node_it->second.at(addr.port);
    auto id = s_->next_connection++;
    auto [port_it, fresh] = s_->next_ephemeral_port.try_emplace(node_, kFirstEphemeralPort);
    auto& conn = s_->connections[id];
    conn.addr[0] = Address::sim(node_, port_it->second++);
    conn.addr[1] = listener.addr;
    listener.backlog.push_back(id);
    s_->cv.notify_all();
    s_->yield(lk);
    return std::make_unique<SimEndpoint>(s_, id, 0);
  }

  Address local(std::uint16_t port) const override { return Address::sim(node_, port); }

  SimNetwork& owner() const { return *owner_; }

 private:
  std::shared_ptr<SimNetwork::State> s_;
  SimNetwork* owner_;
  std::string node_;
};

}  // namespace

// ---------------------------------------------------------------------------

SimNetwork::SimNetwork(std::uint64_t seed) : state_(std::make_shared<State>(seed)) {}

SimNetwork::~SimNetwork() {
  {
    std::lock_guard lk(state_->mutex);
    for (auto& t : state_->tasks) {
      if (t->state != TaskState::Done) t->cancelled = true;
    }
    state_->cv.notify_all();
  }
  for (auto& t : state_->tasks) {
    if (t->thread.joinable()) t->thread.join();
  }
}

std::shared_ptr<Network> SimNetwork::host(const std::string& node) {
  return std::make_shared<SimHost>(state_, this, node);
}

void SimNetwork::spawn(std::string name, std::function<void()> fn) {
  auto task = std::make_unique<Task>();
  task->name = std::move(name);
  task->fn = std::move(fn);
  Task* raw = task.get();
  auto state = state_;
  {
    std::lock_guard lk(state->mutex);
    state->tasks.push_back(std::move(task));
  }
  raw->thread = std::thread([state, raw] {
    tl_state = state.get();
    tl_task = raw;
    {
      std::unique_lock lk(state->mutex);
      state->cv.wait(lk, [&] { return state->running == raw || raw->cancelled; });
      if (raw->cancelled) {
        raw->state = TaskState::Done;
        return;
      }
    }
    try {
      raw->fn();
    } catch (...) {
      raw->error = std::current_exception();
    }
    std::unique_lock lk(state->mutex);
    raw->state = TaskState::Done;
    state->schedule_next();
  });
}

std::vector<TaskReport> SimNetwork::run() {
  {
    std::unique_lock lk(state_->mutex);
    if (!state_->running && !state_->all_done()) state_->schedule_next();
    state_->cv.wait(lk, [&] { return state_->all_done(); });
  }
  std::vector<TaskReport> reports;
  for (auto& t : state_->tasks) {
    if (t->thread.joinable()) t->thread.join();
    reports.push_back({t->name, t->error});
  }
  return reports;
}

void SimNetwork::attach_attacker(std::shared_ptr<AttackerTap> tap) {
  std::lock_guard lk(state_->mutex);
  state_->tap = std::move(tap);
}

void SimNetwork::inject(std::uint64_t connection, const Address& as_from, Frame frame) {
  std::unique_lock lk(state_->mutex);
  auto it = state_->connections.find(connection);
  if (it == state_->connections.end()) throw Error(Errc::InvalidArgument, "unknown connection");
  auto& conn = it->second;
  int side = conn.addr[0] == as_from ? 0 : conn.addr[1] == as_from ? 1 : -1;
  if (side < 0) throw Error(Errc::InvalidArgument, as_from.to_string() + " is not an end of the connection");
  auto& pipe = conn.pipe[side];
  if (pipe.reader_closed) throw Error(Errc::ChannelClosed, "connection closed");
  state_->trace.push_back({state_->trace.size(), connection, conn.addr[side], conn.addr[1 - side], encode_frame(frame), false, true});
  pipe.queue.push_back(std::move(frame));
  state_->cv.notify_all();
  state_->yield(lk);
}

void SimNetwork::wait_until(const std::function<bool()>& ready, std::optional<Millis> timeout) {
  std::unique_lock lk(state_->mutex);
  state_->block_until(lk, ready, timeout);
}

std::vector<Address> SimNetwork::listening(const std::string& node) const {
  std::lock_guard lk(state_->mutex);
  std::vector<Address> out;
  auto it = state_->listeners.find(node);
  if (it == state_->listeners.end()) return out;
  for (const auto& [port, l] : it->second) out.push_back(l->addr);
  return out;
}

std::vector<TraceEntry> SimNetwork::trace() const {
  std::lock_guard lk(state_->mutex);
  return state_->trace;
}

Millis SimNetwork::now() const {
  std::lock_guard lk(state_->mutex);
  return state_->now;
}

void attach_attacker(Network& net, std::shared_ptr<AttackerTap> tap) {
  auto* sim = dynamic_cast<SimHost*>(&net);
  if (!sim) throw Error(Errc::Unsupported, "attacker taps exist only on the simulated network");
  sim->owner().attach_attacker(std::move(tap));
}

}  // namespace sessec
