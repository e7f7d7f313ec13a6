// Copyright 2026 The Escape Simulator Authors
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

// Seeded discrete-event network. A World owns n server states, an event
// queue ordered by (time, seq) and a trace; step() pops one event, feeds it
// to the protocol state machine and schedules whatever comes out.

#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "escape/messages.h"
#include "escape/protocol.h"
#include "escape/server_state.h"
#include "escape/trace.h"
#include "escape/types.h"

namespace escape::sim {

struct LatencyModel {
  Duration min = millis(100);
  Duration max = millis(200);

  /// Uniform one-way delay in [min, max].
  Duration sample(Rng& rng) const;
};

/// Number of recipients a broadcast loses: round(lossRate * recipients).
std::size_t loss_count(std::size_t recipients, double lossRate);

struct BroadcastPlan {
  std::vector<std::pair<ServerId, Duration>> deliveries;  // recipient order preserved
  std::vector<ServerId> dropped;
};

/// Picks exactly loss_count() recipients uniformly without replacement to
/// drop, then draws an independent delay for each survivor.
BroadcastPlan deliver_broadcast(std::span<const ServerId> recipients, double lossRate,
                                const LatencyModel& latency, Rng& rng);

namespace ev {
struct Deliver {
  Envelope env;
};
struct TimerFire {
  ServerId server;
};
struct HeartbeatTick {
  ServerId leader;
  Term term;
};
struct Crash {
  ServerId server;
};
struct Recover {
  ServerId server;
};
}  // namespace ev

using EventKind = std::variant<ev::Deliver, ev::TimerFire, ev::HeartbeatTick, ev::Crash,
                               ev::Recover>;

struct SimEvent {
  TimePoint time;
  std::uint64_t seq = 0;
  EventKind kind;
};

/// Forces a server's election deadline. After the first forced expiry,
/// `alignedReelections` further deadlines follow at `reelectionPeriod`
/// spacing from the previous one.
struct PinnedTimeout {
  ServerId server;
  TimePoint firstDeadline;
  std::uint32_t alignedReelections = 0;
  Duration reelectionPeriod{};
};

struct FaultSchedule {
  std::vector<std::pair<ServerId, TimePoint>> crashes;
  std::vector<std::pair<ServerId, TimePoint>> recoveries;
  double lossRate = 0.0;
  bool lossOnReplies = false;
  std::vector<PinnedTimeout> pinnedTimeouts;
  // Crash this many successive campaign starters right after they broadcast.
  std::uint32_t candidateCrashes = 0;
};

enum class StopReason : std::uint8_t { kStopped, kHorizon, kExhausted };

class World {
 public:
  /// Every server starts at time zero with its initial configuration.
  World(const ProtocolParams& params, const LatencyModel& latency, std::uint64_t seed);

  /// Starts from explicit states (ids 1..n in order) at `start`.
  World(const ProtocolParams& params, const LatencyModel& latency, std::uint64_t seed,
        std::vector<ServerState> states, TimePoint start);

  void set_loss(double rate, bool onReplies);
  void schedule_crash(ServerId server, TimePoint at);
  void schedule_recover(ServerId server, TimePoint at);
  void pin_timeout(const PinnedTimeout& pin);
  void crash_next_candidates(std::uint32_t count) { candidateCrashBudget_ = count; }
  void apply(const FaultSchedule& faults);
  void mark(std::string text);

  /// Processes one event. Returns false when the queue is empty.
  bool step();

  StopReason run_until(const std::function<bool(const World&)>& stop, TimePoint horizon);

  TimePoint now() const { return now_; }
  const ProtocolParams& params() const { return params_; }
  const LatencyModel& latency() const { return latency_; }
  const std::vector<ServerState>& servers() const { return servers_; }
  const ServerState& server(ServerId id) const { return servers_.at(id.value - 1); }
  const Trace& trace() const { return trace_; }
  Trace take_trace() { return std::move(trace_); }
  std::size_t pending_events() const { return queue_.size(); }

  /// Highest term carried by a message still in flight, if any.
  std::optional<Term> max_in_flight_term() const;

  /// Server that most recently became leader, and when.
  std::optional<ServerId> last_leader() const { return lastLeader_; }
  TimePoint last_leader_since() const { return lastLeaderAt_; }

  std::uint64_t messages_sent() const { return messagesSent_; }

 private:
  struct Snapshot {
    Role role;
    Term term;
    std::optional<Vote> vote;
    Configuration config;
    std::uint64_t commit;
    std::size_t logSize;
  };

  ServerState& mut(ServerId id) { return servers_[id.value - 1]; }
  Snapshot snapshot(const ServerState& s) const;
  void record_diff(const ServerState& s, const Snapshot& before,
                   std::optional<std::uint64_t> truncatedFrom);

  void push(TimePoint at, EventKind kind);
  void arm_timer(ServerState& s);
  void apply_pin(ServerState& s);
  void send(ServerId from, ServerId to, Message msg, Duration delay);
  void broadcast(ServerId from, std::vector<std::pair<ServerId, Message>> msgs);
  void reply(ServerId from, ServerId to, Message msg);
  void on_became_leader(ServerState& s);
  void heartbeat(ServerState& s);

  void handle(const ev::Deliver& e);
  void handle(const ev::TimerFire& e);
  void handle(const ev::HeartbeatTick& e);
  void handle(const ev::Crash& e);
  void handle(const ev::Recover& e);

  ProtocolParams params_;
  LatencyModel latency_;
  Rng netRng_;
  Rng timerRng_;
  std::vector<ServerState> servers_;
  std::vector<SimEvent> queue_;  // binary heap on (time, seq)
  std::uint64_t nextSeq_ = 0;
  TimePoint now_{};
  Trace trace_;

  double lossRate_ = 0.0;
  bool lossOnReplies_ = false;
  std::vector<std::optional<TimePoint>> pendingTimer_;  // queued TimerFire per server
  std::vector<std::deque<TimePoint>> forced_;           // pinned deadlines per server
  std::uint32_t candidateCrashBudget_ = 0;
  std::map<Term, std::uint64_t> inFlightTerms_;
  std::optional<ServerId> lastLeader_;
  TimePoint lastLeaderAt_{};
  std::uint64_t messagesSent_ = 0;
};

}  // namespace escape::sim
