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

// Per-server consensus state machine shared by Raft, Z-Raft and Escape.
//
// Every function here is a deterministic transformation of a ServerState
// driven by one input (a message, a timer expiry, a heartbeat tick) and,
// where Raft needs it, a caller-owned random source. Nothing blocks and
// nothing is shared; the simulator owns the states and the clock.
//
// The three variants differ only in timer and term arithmetic:
//   Raft    timeout sampled from [lo, hi], campaign term + 1
//   Z-Raft  static priority = id, timeout from priority, term + priority
//   Escape  Z-Raft plus leader-driven rearrangement of configurations and
//           the rule that voters refuse candidates with a stale clock

#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "escape/messages.h"
#include "escape/server_state.h"
#include "escape/types.h"

namespace escape::protocol {

/// baseTime + spacing * (n - priority). Throws Error(kInvalidPriority)
/// for a priority outside [1, n].
Duration compute_election_timeout(const ProtocolParams& params, std::uint32_t priority);

/// Uniform draw from the Raft timeout range.
Duration sample_raft_timeout(const ProtocolParams& params, Rng& rng);

/// Configuration a server holds when it joins: priority = id for the
/// prioritized variants, a unit-priority placeholder for Raft.
Configuration initial_configuration(const ProtocolParams& params, ServerId id);

ServerState make_server(const ProtocolParams& params, ServerId id, TimePoint now, Rng& rng);

/// Term a server moves to when it starts a campaign.
Term advance_term_for_campaign(const ServerState& state, const ProtocolParams& params);

/// Adopts a higher received term: steps down and forgets the candidacy.
/// Lower or equal terms leave the state untouched. Returns the new term.
Term merge_term(ServerState& state, Term received);

bool is_log_up_to_date(LogPosition candidate, LogPosition voter);

void reset_election_timer(ServerState& state, const ProtocolParams& params, TimePoint now,
                          Rng& rng);

struct Campaign {
  RequestVoteArgs request;
  Term previousTerm;
  std::uint32_t priority = 1;
  bool wonImmediately = false;  // single-server quorum
};

/// Timer expiry on a follower or candidate. Throws Error(kIllegalTransition)
/// on a leader or a crashed server.
Campaign start_election(ServerState& state, const ProtocolParams& params, TimePoint now,
                        Rng& rng);

RequestVoteReply handle_request_vote(ServerState& state, const RequestVoteArgs& args,
                                     const ProtocolParams& params, TimePoint now, Rng& rng);

/// Returns true when this reply completed a quorum and the server is now leader.
/// A leader knocked out by a higher term re-arms its election timer from `now`.
bool handle_vote_reply(ServerState& state, ServerId from, const RequestVoteReply& reply,
                       const ProtocolParams& params, TimePoint now, Rng& rng);

/// Leader setup on winning: replication cursors and, for Escape, the
/// configuration view the first rearrangement starts from.
void become_leader(ServerState& state, const ProtocolParams& params);

/// The configuration a leader holds for itself while in office.
Configuration leader_configuration(const ProtocolParams& params, std::uint64_t clock);

struct AppendEntriesResult {
  AppendEntriesReply reply;
  std::optional<std::uint64_t> truncatedFrom;
};

AppendEntriesResult handle_append_entries(ServerState& state, const AppendEntriesArgs& args,
                                          const ProtocolParams& params, TimePoint now,
                                          Rng& rng);

/// Adopts `incoming` iff its clock is strictly newer, rescheduling the
/// election deadline from `now` with the new timer period.
bool adopt_configuration(ServerState& state, const Configuration& incoming, TimePoint now);

/// One heartbeat round: appends the round's fresh entries, rearranges
/// configurations (Escape), and returns the per-follower requests.
std::vector<std::pair<ServerId, AppendEntriesArgs>> begin_heartbeat_round(
    ServerState& state, const ProtocolParams& params);

struct ReplyOutcome {
  bool steppedDown = false;
  std::optional<ppf::RecordOutcome> recorded;
};

ReplyOutcome handle_append_entries_reply(ServerState& state, ServerId from,
                                         const AppendEntriesReply& reply,
                                         const ProtocolParams& params, TimePoint now, Rng& rng);

/// Deterministic 8-byte payload for the entry a leader appends at `index`.
std::vector<std::uint8_t> entry_payload(Term term, std::uint64_t index);

/// Loses volatile state. Term, vote, log and configuration survive.
void crash(ServerState& state);

/// Comes back as a follower with the election timer re-armed from `now`.
void recover(ServerState& state, const ProtocolParams& params, TimePoint now, Rng& rng);

}  // namespace escape::protocol
