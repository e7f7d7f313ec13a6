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

#include "escape/protocol.h"

#include <algorithm>

#include <fmt/core.h>

namespace escape::protocol {

namespace {

// Merges a received term. A leader pushed out of office has no running
// election timer, so it gets a fresh one.
void merge_and_rearm(ServerState& state, Term received, const ProtocolParams& params,
                     TimePoint now, Rng& rng) {
  bool wasLeader = state.role == Role::kLeader;
  merge_term(state, received);
  if (wasLeader && state.role != Role::kLeader) reset_election_timer(state, params, now, rng);
}

void advance_commit(ServerState& state, const ProtocolParams& params) {
  auto& ls = *state.leader;
  std::vector<std::uint64_t> matches;
  matches.reserve(params.n);
  for (std::uint32_t id = 1; id <= params.n; ++id) {
    matches.push_back(ServerId{id} == state.id ? state.last_log_index() : ls.matchIndex[id]);
  }
  std::nth_element(matches.begin(), matches.begin() + (params.quorum() - 1), matches.end(),
                   std::greater<>());
  std::uint64_t candidate = matches[params.quorum() - 1];
  // Only entries from the leader's own term commit by counting replicas.
  if (candidate > state.commitIndex && state.term_at(candidate) == state.currentTerm) {
    state.commitIndex = candidate;
  }
}

}  // namespace

Duration compute_election_timeout(const ProtocolParams& params, std::uint32_t priority) {
  if (priority < 1 || priority > params.n) {
    throw Error(ErrorCode::kInvalidPriority,
                fmt::format("priority {} outside [1, {}]", priority, params.n));
  }
  return params.baseTime + params.spacing * static_cast<std::int64_t>(params.n - priority);
}

Duration sample_raft_timeout(const ProtocolParams& params, Rng& rng) {
  if (params.raftTimeoutLo == params.raftTimeoutHi) return params.raftTimeoutLo;
  std::uniform_int_distribution<Duration::rep> dist(params.raftTimeoutLo.count(),
                                                    params.raftTimeoutHi.count());
  return Duration{dist(rng)};
}

Configuration initial_configuration(const ProtocolParams& params, ServerId id) {
  if (params.variant == Variant::kRaft) return Configuration{1, params.raftTimeoutLo, 0};
  std::uint32_t priority = params.degenerate ? 1 : id.value;
  return Configuration{priority, compute_election_timeout(params, priority), 0};
}

ServerState make_server(const ProtocolParams& params, ServerId id, TimePoint now, Rng& rng) {
  ServerState s;
  s.id = id;
  s.config = initial_configuration(params, id);
  reset_election_timer(s, params, now, rng);
  return s;
}

Term advance_term_for_campaign(const ServerState& state, const ProtocolParams& params) {
  if (!params.uses_priorities()) return state.currentTerm + 1;
  return state.currentTerm + state.config.priority;
}

Term merge_term(ServerState& state, Term received) {
  if (received > state.currentTerm) {
    state.currentTerm = received;
    state.role = Role::kFollower;
    state.votesReceived.clear();
    state.leader.reset();
  }
  return state.currentTerm;
}

bool is_log_up_to_date(LogPosition candidate, LogPosition voter) {
  if (candidate.term != voter.term) return candidate.term > voter.term;
  return candidate.index >= voter.index;
}

void reset_election_timer(ServerState& state, const ProtocolParams& params, TimePoint now,
                          Rng& rng) {
  Duration period = params.variant == Variant::kRaft ? sample_raft_timeout(params, rng)
                                                     : state.config.timerPeriod;
  state.electionDeadline = now + period;
}

Campaign start_election(ServerState& state, const ProtocolParams& params, TimePoint now,
                        Rng& rng) {
  if (state.crashed) {
    throw Error(ErrorCode::kIllegalTransition,
                fmt::format("server {} cannot campaign while crashed", state.id.value));
  }
  if (state.role == Role::kLeader) {
    throw Error(ErrorCode::kIllegalTransition,
                fmt::format("leader {} cannot start a campaign", state.id.value));
  }
  Campaign c;
  c.previousTerm = state.currentTerm;
  c.priority = params.uses_priorities() ? state.config.priority : 1;
  state.currentTerm = advance_term_for_campaign(state, params);
  state.role = Role::kCandidate;
  state.votedFor = Vote{state.currentTerm, state.id};
  state.votesReceived = {state.id};
  reset_election_timer(state, params, now, rng);

  LogPosition last = state.last_log_position();
  c.request = RequestVoteArgs{state.currentTerm, state.id, last.index, last.term, std::nullopt};
  if (params.clock_checks()) c.request.confClock = state.config.confClock;

  if (state.votesReceived.size() >= params.quorum()) {
    become_leader(state, params);
    c.wonImmediately = true;
  }
  return c;
}

RequestVoteReply handle_request_vote(ServerState& state, const RequestVoteArgs& args,
                                     const ProtocolParams& params, TimePoint now, Rng& rng) {
  merge_and_rearm(state, args.term, params, now, rng);
  RequestVoteReply reply{state.currentTerm, false};
  if (args.term < state.currentTerm) return reply;

  bool voteFree = !state.votedFor || state.votedFor->term != state.currentTerm ||
                  state.votedFor->candidate == args.candidateId;
  bool logOk = is_log_up_to_date({args.lastLogIndex, args.lastLogTerm},
                                 state.last_log_position());
  bool clockOk = !params.clock_checks() || args.confClock.value_or(0) >= state.config.confClock;
  if (voteFree && logOk && clockOk) {
    state.votedFor = Vote{state.currentTerm, args.candidateId};
    reply.voteGranted = true;
    reset_election_timer(state, params, now, rng);
  }
  return reply;
}

bool handle_vote_reply(ServerState& state, ServerId from, const RequestVoteReply& reply,
                       const ProtocolParams& params, TimePoint now, Rng& rng) {
  merge_and_rearm(state, reply.term, params, now, rng);
  if (state.role != Role::kCandidate || reply.term != state.currentTerm || !reply.voteGranted) {
    return false;
  }
  state.votesReceived.insert(from);
  if (state.votesReceived.size() < params.quorum()) return false;
  become_leader(state, params);
  return true;
}

Configuration leader_configuration(const ProtocolParams& params, std::uint64_t clock) {
  return Configuration{1, compute_election_timeout(params, 1), clock};
}

void become_leader(ServerState& state, const ProtocolParams& params) {
  state.role = Role::kLeader;
  state.votesReceived.clear();

  LeaderState ls;
  ls.nextIndex.assign(params.n + 1, state.last_log_index() + 1);
  ls.matchIndex.assign(params.n + 1, 0);
  ls.accepted.assign(params.n + 1, false);
  if (params.ppf_enabled()) {
    std::vector<ServerId> followers;
    for (std::uint32_t id = 1; id <= params.n; ++id) {
      if (ServerId{id} != state.id) followers.emplace_back(id);
    }
    ls.tracker = ppf::ResponsivenessTracker(followers);
    ls.assignment = ppf::initial_assignment(params, state.id, ppf::clock_epoch(state.currentTerm));
  }
  state.leader = std::move(ls);
}

std::vector<std::uint8_t> entry_payload(Term term, std::uint64_t index) {
  // splitmix64 finalizer over (term, index).
  std::uint64_t z = (term.value << 32) ^ index;
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  std::vector<std::uint8_t> out(8);
  for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(z >> (8 * i));
  return out;
}

AppendEntriesResult handle_append_entries(ServerState& state, const AppendEntriesArgs& args,
                                          const ProtocolParams& params, TimePoint now,
                                          Rng& rng) {
  merge_and_rearm(state, args.term, params, now, rng);
  AppendEntriesResult result;
  auto& reply = result.reply;
  reply.term = state.currentTerm;
  reply.answeredClock = args.newConfig ? args.newConfig->confClock : 0;

  if (args.term < state.currentTerm) {
    reply.status = {state.last_log_index(), state.config.timerPeriod};
    return result;
  }

  if (state.role == Role::kCandidate) {
    state.role = Role::kFollower;
    state.votesReceived.clear();
  }
  if (args.newConfig && params.ppf_enabled()) adopt_configuration(state, *args.newConfig, now);
  reset_election_timer(state, params, now, rng);

  bool prevOk = args.prevLogIndex <= state.last_log_index() &&
                state.term_at(args.prevLogIndex) == args.prevLogTerm;
  if (!prevOk) {
    reply.status = {state.last_log_index(), state.config.timerPeriod};
    return result;
  }

  for (const LogEntry& e : args.entries) {
    if (e.index <= state.last_log_index()) {
      if (state.term_at(e.index) == e.term) continue;
      state.log.resize(e.index - 1);
      if (!result.truncatedFrom) result.truncatedFrom = e.index;
    }
    state.log.push_back(e);
  }
  std::uint64_t lastNew = args.prevLogIndex + args.entries.size();
  if (args.leaderCommit > state.commitIndex) {
    state.commitIndex = std::max(state.commitIndex, std::min(args.leaderCommit, lastNew));
  }
  reply.success = true;
  reply.status = {lastNew, state.config.timerPeriod};
  return result;
}

bool adopt_configuration(ServerState& state, const Configuration& incoming, TimePoint now) {
  if (incoming.confClock <= state.config.confClock) return false;
  state.config = incoming;
  state.electionDeadline = now + incoming.timerPeriod;
  return true;
}

std::vector<std::pair<ServerId, AppendEntriesArgs>> begin_heartbeat_round(
    ServerState& state, const ProtocolParams& params) {
  if (state.role != Role::kLeader || !state.leader) {
    throw Error(ErrorCode::kIllegalTransition,
                fmt::format("server {} is not leading", state.id.value));
  }
  auto& ls = *state.leader;
  ++ls.rounds;
  for (std::uint32_t i = 0; i < params.entriesPerHeartbeat; ++i) {
    std::uint64_t index = state.last_log_index() + 1;
    state.log.push_back(LogEntry{state.currentTerm, index, entry_payload(state.currentTerm, index)});
  }
  if (params.ppf_enabled()) {
    ls.assignment = ppf::rearrange_configurations(ls.tracker, ls.assignment, params);
    state.config = leader_configuration(params, ls.assignment.clock);
  }
  advance_commit(state, params);

  std::vector<std::pair<ServerId, AppendEntriesArgs>> out;
  out.reserve(params.n - 1);
  for (std::uint32_t id = 1; id <= params.n; ++id) {
    ServerId peer{id};
    if (peer == state.id) continue;
    AppendEntriesArgs args;
    args.term = state.currentTerm;
    args.leaderId = state.id;
    args.prevLogIndex = ls.nextIndex[id] - 1;
    args.prevLogTerm = state.term_at(args.prevLogIndex);
    args.entries.assign(state.log.begin() + static_cast<std::ptrdiff_t>(args.prevLogIndex),
                        state.log.end());
    args.leaderCommit = state.commitIndex;
    if (params.ppf_enabled()) args.newConfig = ppf::piggyback(ls.assignment, peer);
    out.emplace_back(peer, std::move(args));
  }
  return out;
}

ReplyOutcome handle_append_entries_reply(ServerState& state, ServerId from,
                                         const AppendEntriesReply& reply,
                                         const ProtocolParams& params, TimePoint now, Rng& rng) {
  ReplyOutcome out;
  bool wasLeader = state.role == Role::kLeader;
  merge_and_rearm(state, reply.term, params, now, rng);
  out.steppedDown = wasLeader && state.role != Role::kLeader;
  if (state.role != Role::kLeader || reply.term != state.currentTerm) return out;
  if (from.value == 0 || from.value > params.n || from == state.id) return out;

  auto& ls = *state.leader;
  if (!reply.success) {
    std::uint64_t hinted = reply.status.logIndex + 1;
    ls.nextIndex[from.value] = std::max<std::uint64_t>(
        1, std::min(ls.nextIndex[from.value] - 1, hinted));
    return out;
  }
  ls.matchIndex[from.value] = std::max(ls.matchIndex[from.value], reply.status.logIndex);
  ls.nextIndex[from.value] = std::max(ls.nextIndex[from.value], ls.matchIndex[from.value] + 1);
  if (!ls.accepted[from.value]) {
    ls.accepted[from.value] = true;
    ++ls.acceptedCount;
  }
  if (params.ppf_enabled()) {
    out.recorded = ls.tracker.record_reply(from, reply.status, reply.answeredClock);
  }
  advance_commit(state, params);
  return out;
}

void crash(ServerState& state) {
  state.crashed = true;
  state.role = Role::kFollower;
  state.votesReceived.clear();
  state.leader.reset();
  state.commitIndex = 0;
}

void recover(ServerState& state, const ProtocolParams& params, TimePoint now, Rng& rng) {
  state.crashed = false;
  reset_election_timer(state, params, now, rng);
}

}  // namespace escape::protocol
