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

#include "escape/simnet.h"

#include <algorithm>
#include <cmath>
#include <iterator>

#include <fmt/core.h>

namespace escape::sim {

namespace {

bool later(const SimEvent& a, const SimEvent& b) {
  if (a.time != b.time) return a.time > b.time;
  return a.seq > b.seq;
}

Rng make_stream(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    stream};
  return Rng(seq);
}

}  // namespace

Duration LatencyModel::sample(Rng& rng) const {
  if (min == max) return min;
  std::uniform_int_distribution<Duration::rep> dist(min.count(), max.count());
  return Duration{dist(rng)};
}

std::size_t loss_count(std::size_t recipients, double lossRate) {
  auto k = static_cast<std::size_t>(std::llround(lossRate * static_cast<double>(recipients)));
  return std::min(k, recipients);
}

BroadcastPlan deliver_broadcast(std::span<const ServerId> recipients, double lossRate,
                                const LatencyModel& latency, Rng& rng) {
  BroadcastPlan plan;
  std::size_t k = loss_count(recipients.size(), lossRate);
  if (k > 0) {
    std::sample(recipients.begin(), recipients.end(), std::back_inserter(plan.dropped), k, rng);
    std::sort(plan.dropped.begin(), plan.dropped.end());
  }
  plan.deliveries.reserve(recipients.size() - k);
  for (ServerId r : recipients) {
    if (std::binary_search(plan.dropped.begin(), plan.dropped.end(), r)) continue;
    plan.deliveries.emplace_back(r, latency.sample(rng));
  }
  return plan;
}

World::World(const ProtocolParams& params, const LatencyModel& latency, std::uint64_t seed)
    : params_(params),
      latency_(latency),
      netRng_(make_stream(seed, 1)),
      timerRng_(make_stream(seed, 2)) {
  servers_.reserve(params.n);
  for (std::uint32_t id = 1; id <= params.n; ++id) {
    servers_.push_back(protocol::make_server(params, ServerId{id}, now_, timerRng_));
  }
  pendingTimer_.resize(params.n);
  forced_.resize(params.n);
  for (auto& s : servers_) {
    trace_.append(now_, s.id, rec::Init{s.currentTerm, s.config});
    arm_timer(s);
  }
}

World::World(const ProtocolParams& params, const LatencyModel& latency, std::uint64_t seed,
             std::vector<ServerState> states, TimePoint start)
    : params_(params),
      latency_(latency),
      netRng_(make_stream(seed, 1)),
      timerRng_(make_stream(seed, 2)),
      servers_(std::move(states)),
      now_(start) {
  if (servers_.size() != params.n) {
    throw Error(ErrorCode::kInvalidScenario,
                fmt::format("expected {} server states, got {}", params.n, servers_.size()));
  }
  for (std::uint32_t i = 0; i < params.n; ++i) {
    if (servers_[i].id != ServerId{i + 1}) {
      throw Error(ErrorCode::kInvalidScenario, "server states must be ordered by id from 1");
    }
  }
  pendingTimer_.resize(params.n);
  forced_.resize(params.n);
  for (auto& s : servers_) {
    trace_.append(now_, s.id, rec::Init{s.currentTerm, s.config});
    if (s.votedFor) trace_.append(now_, s.id, rec::VoteCast{s.votedFor->term, s.votedFor->candidate});
    for (const LogEntry& e : s.log) {
      trace_.append(now_, s.id, rec::Append{e.index, e.term, payload_digest(e.payload)});
    }
    if (s.commitIndex > 0) trace_.append(now_, s.id, rec::Commit{0, s.commitIndex});
    if (s.crashed) trace_.append(now_, s.id, rec::Crash{});
    if (s.role == Role::kLeader && !s.crashed) {
      if (!s.leader) protocol::become_leader(s, params_);
      lastLeader_ = s.id;
      lastLeaderAt_ = now_;
      push(now_, ev::HeartbeatTick{s.id, s.currentTerm});
    }
    arm_timer(s);
  }
}

void World::set_loss(double rate, bool onReplies) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw Error(ErrorCode::kInvalidScenario, fmt::format("loss rate {} outside [0, 1)", rate));
  }
  lossRate_ = rate;
  lossOnReplies_ = onReplies;
}

void World::schedule_crash(ServerId server, TimePoint at) { push(at, ev::Crash{server}); }
void World::schedule_recover(ServerId server, TimePoint at) { push(at, ev::Recover{server}); }

void World::pin_timeout(const PinnedTimeout& pin) {
  auto& q = forced_.at(pin.server.value - 1);
  q.clear();
  TimePoint t = pin.firstDeadline;
  q.push_back(t);
  for (std::uint32_t i = 0; i < pin.alignedReelections; ++i) {
    t += pin.reelectionPeriod;
    q.push_back(t);
  }
  ServerState& s = mut(pin.server);
  apply_pin(s);
  arm_timer(s);
}

void World::apply(const FaultSchedule& faults) {
  set_loss(faults.lossRate, faults.lossOnReplies);
  for (const auto& [id, t] : faults.crashes) schedule_crash(id, t);
  for (const auto& [id, t] : faults.recoveries) schedule_recover(id, t);
  for (const auto& pin : faults.pinnedTimeouts) pin_timeout(pin);
  crash_next_candidates(faults.candidateCrashes);
}

void World::mark(std::string text) { trace_.append(now_, ServerId{}, rec::Marker{std::move(text)}); }

std::optional<Term> World::max_in_flight_term() const {
  if (inFlightTerms_.empty()) return std::nullopt;
  return inFlightTerms_.rbegin()->first;
}

void World::push(TimePoint at, EventKind kind) {
  queue_.push_back(SimEvent{at, nextSeq_++, std::move(kind)});
  std::push_heap(queue_.begin(), queue_.end(), later);
}

World::Snapshot World::snapshot(const ServerState& s) const {
  return Snapshot{s.role, s.currentTerm, s.votedFor, s.config, s.commitIndex, s.log.size()};
}

void World::record_diff(const ServerState& s, const Snapshot& before,
                        std::optional<std::uint64_t> truncatedFrom) {
  if (s.currentTerm != before.term) {
    trace_.append(now_, s.id, rec::TermChange{before.term, s.currentTerm});
  }
  if (s.role != before.role) {
    trace_.append(now_, s.id, rec::RoleChange{before.role, s.role, s.currentTerm});
  }
  if (s.votedFor && s.votedFor != before.vote) {
    trace_.append(now_, s.id, rec::VoteCast{s.votedFor->term, s.votedFor->candidate});
  }
  if (s.config != before.config) {
    trace_.append(now_, s.id, rec::ConfigChange{before.config, s.config});
  }
  std::uint64_t firstNew = before.logSize + 1;
  if (truncatedFrom) {
    trace_.append(now_, s.id, rec::Truncate{*truncatedFrom});
    firstNew = *truncatedFrom;
  }
  for (std::uint64_t i = firstNew; i <= s.log.size(); ++i) {
    const LogEntry& e = s.log[i - 1];
    trace_.append(now_, s.id, rec::Append{e.index, e.term, payload_digest(e.payload)});
  }
  if (s.commitIndex != before.commit) {
    trace_.append(now_, s.id, rec::Commit{before.commit, s.commitIndex});
  }
}

void World::apply_pin(ServerState& s) {
  auto& q = forced_[s.id.value - 1];
  while (!q.empty() && q.front() < now_) q.pop_front();
  if (q.empty() || s.crashed || s.role == Role::kLeader) return;
  s.electionDeadline = q.front();
}

void World::arm_timer(ServerState& s) {
  if (s.crashed || s.role == Role::kLeader) return;
  auto& pending = pendingTimer_[s.id.value - 1];
  if (pending && *pending <= s.electionDeadline) return;
  pending = s.electionDeadline;
  push(s.electionDeadline, ev::TimerFire{s.id});
}

void World::send(ServerId from, ServerId to, Message msg, Duration delay) {
  ++messagesSent_;
  trace_.append(now_, from, rec::MessageEvent{rec::Direction::kSend, rec::DropReason::kNone, to,
                                              summarize(msg)});
  ++inFlightTerms_[term_of(msg)];
  push(now_ + delay, ev::Deliver{Envelope{from, to, std::move(msg)}});
}

void World::broadcast(ServerId from, std::vector<std::pair<ServerId, Message>> msgs) {
  std::vector<ServerId> recipients;
  recipients.reserve(msgs.size());
  for (const auto& m : msgs) recipients.push_back(m.first);
  BroadcastPlan plan = deliver_broadcast(recipients, lossRate_, latency_, netRng_);

  std::size_t next = 0;
  for (auto& [to, msg] : msgs) {
    if (next < plan.deliveries.size() && plan.deliveries[next].first == to) {
      send(from, to, std::move(msg), plan.deliveries[next].second);
      ++next;
    } else {
      ++messagesSent_;
      trace_.append(now_, from, rec::MessageEvent{rec::Direction::kDrop, rec::DropReason::kLoss,
                                                  to, summarize(msg)});
    }
  }
}

void World::reply(ServerId from, ServerId to, Message msg) {
  if (lossOnReplies_ && lossRate_ > 0.0) {
    std::bernoulli_distribution lose(lossRate_);
    if (lose(netRng_)) {
      ++messagesSent_;
      trace_.append(now_, from, rec::MessageEvent{rec::Direction::kDrop, rec::DropReason::kLoss,
                                                  to, summarize(msg)});
      return;
    }
  }
  send(from, to, std::move(msg), latency_.sample(netRng_));
}

void World::on_became_leader(ServerState& s) {
  lastLeader_ = s.id;
  lastLeaderAt_ = now_;
  // A leader is in place, so forced re-elections have nothing left to force.
  for (auto& q : forced_) q.clear();
  heartbeat(s);
}

void World::heartbeat(ServerState& s) {
  Snapshot before = snapshot(s);
  auto requests = protocol::begin_heartbeat_round(s, params_);
  record_diff(s, before, std::nullopt);
  std::vector<std::pair<ServerId, Message>> msgs;
  msgs.reserve(requests.size());
  for (auto& [to, args] : requests) msgs.emplace_back(to, Message{std::move(args)});
  broadcast(s.id, std::move(msgs));
  push(now_ + params_.heartbeatInterval, ev::HeartbeatTick{s.id, s.currentTerm});
}

bool World::step() {
  if (queue_.empty()) return false;
  std::pop_heap(queue_.begin(), queue_.end(), later);
  SimEvent e = std::move(queue_.back());
  queue_.pop_back();
  now_ = e.time;
  std::visit([this](const auto& k) { handle(k); }, e.kind);
  return true;
}

StopReason World::run_until(const std::function<bool(const World&)>& stop, TimePoint horizon) {
  if (stop(*this)) return StopReason::kStopped;
  while (!queue_.empty()) {
    if (queue_.front().time > horizon) {
      now_ = horizon;
      return StopReason::kHorizon;
    }
    step();
    if (stop(*this)) return StopReason::kStopped;
  }
  return StopReason::kExhausted;
}

void World::handle(const ev::Deliver& e) {
  auto it = inFlightTerms_.find(term_of(e.env.msg));
  if (--it->second == 0) inFlightTerms_.erase(it);

  ServerState& s = mut(e.env.to);
  if (s.crashed) {
    trace_.append(now_, e.env.from, rec::MessageEvent{rec::Direction::kDrop,
                                                      rec::DropReason::kCrashed, e.env.to,
                                                      summarize(e.env.msg)});
    return;
  }
  trace_.append(now_, s.id, rec::MessageEvent{rec::Direction::kReceive, rec::DropReason::kNone,
                                              e.env.from, summarize(e.env.msg)});
  Snapshot before = snapshot(s);
  const ServerId from = e.env.from;

  std::visit(
      [&](const auto& body) {
        using T = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<T, AppendEntriesArgs>) {
          auto res = protocol::handle_append_entries(s, body, params_, now_, timerRng_);
          apply_pin(s);
          record_diff(s, before, res.truncatedFrom);
          reply(s.id, from, Message{res.reply});
        } else if constexpr (std::is_same_v<T, AppendEntriesReply>) {
          auto out =
              protocol::handle_append_entries_reply(s, from, body, params_, now_, timerRng_);
          apply_pin(s);
          record_diff(s, before, std::nullopt);
          if (out.recorded == ppf::RecordOutcome::kUnknownServer) {
            trace_.append(now_, s.id,
                          rec::Warning{fmt::format("reply from unknown follower {}", from.value)});
          }
        } else if constexpr (std::is_same_v<T, RequestVoteArgs>) {
          auto r = protocol::handle_request_vote(s, body, params_, now_, timerRng_);
          apply_pin(s);
          record_diff(s, before, std::nullopt);
          reply(s.id, from, Message{r});
        } else {
          bool won = protocol::handle_vote_reply(s, from, body, params_, now_, timerRng_);
          apply_pin(s);
          record_diff(s, before, std::nullopt);
          if (won) on_became_leader(s);
        }
      },
      e.env.msg);
  arm_timer(s);
}

void World::handle(const ev::TimerFire& e) {
  ServerState& s = mut(e.server);
  auto& pending = pendingTimer_[e.server.value - 1];
  if (pending && *pending == now_) pending.reset();
  if (s.crashed || s.role == Role::kLeader) return;
  if (s.electionDeadline > now_) {
    arm_timer(s);
    return;
  }

  Snapshot before = snapshot(s);
  auto campaign = protocol::start_election(s, params_, now_, timerRng_);
  auto& q = forced_[s.id.value - 1];
  if (!q.empty() && q.front() <= now_) q.pop_front();
  apply_pin(s);
  trace_.append(now_, s.id,
                rec::CampaignStart{campaign.previousTerm, s.currentTerm, campaign.priority,
                                   s.config.confClock});
  record_diff(s, before, std::nullopt);

  std::vector<std::pair<ServerId, Message>> msgs;
  msgs.reserve(params_.n - 1);
  for (std::uint32_t id = 1; id <= params_.n; ++id) {
    if (ServerId{id} != s.id) msgs.emplace_back(ServerId{id}, Message{campaign.request});
  }
  broadcast(s.id, std::move(msgs));

  if (candidateCrashBudget_ > 0) {
    --candidateCrashBudget_;
    handle(ev::Crash{s.id});
    return;
  }
  if (campaign.wonImmediately) on_became_leader(s);
  arm_timer(s);
}

void World::handle(const ev::HeartbeatTick& e) {
  ServerState& s = mut(e.leader);
  if (s.crashed || s.role != Role::kLeader || s.currentTerm != e.term) return;
  heartbeat(s);
}

void World::handle(const ev::Crash& e) {
  ServerState& s = mut(e.server);
  if (s.crashed) return;
  Snapshot before = snapshot(s);
  protocol::crash(s);
  record_diff(s, before, std::nullopt);
  trace_.append(now_, s.id, rec::Crash{});
}

void World::handle(const ev::Recover& e) {
  ServerState& s = mut(e.server);
  if (!s.crashed) return;
  protocol::recover(s, params_, now_, timerRng_);
  trace_.append(now_, s.id, rec::Recover{});
  apply_pin(s);
  arm_timer(s);
}

}  // namespace escape::sim
