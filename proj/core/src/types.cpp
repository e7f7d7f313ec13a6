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

#include <fmt/core.h>

#include "escape/messages.h"
#include "escape/server_state.h"
#include "escape/types.h"

namespace escape {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kRaft: return "raft";
    case Variant::kZRaft: return "zraft";
    case Variant::kEscape: return "escape";
  }
  return "unknown";
}

std::optional<Variant> parse_variant(std::string_view text) {
  if (text == "raft") return Variant::kRaft;
  if (text == "zraft" || text == "z-raft") return Variant::kZRaft;
  if (text == "escape") return Variant::kEscape;
  return std::nullopt;
}

std::string_view to_string(Role r) {
  switch (r) {
    case Role::kFollower: return "follower";
    case Role::kCandidate: return "candidate";
    case Role::kLeader: return "leader";
  }
  return "unknown";
}

std::string_view to_string(MessageKind k) {
  switch (k) {
    case MessageKind::kAppendEntries: return "append_entries";
    case MessageKind::kAppendEntriesReply: return "append_entries_reply";
    case MessageKind::kRequestVote: return "request_vote";
    case MessageKind::kRequestVoteReply: return "request_vote_reply";
  }
  return "unknown";
}

Term term_of(const Message& m) {
  return std::visit([](const auto& body) { return body.term; }, m);
}

void ProtocolParams::validate(Duration maxLatency) const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidParams, what); };
  if (n == 0) fail("cluster size must be positive");
  if (heartbeatInterval <= Duration::zero()) fail("heartbeat interval must be positive");
  if (entriesPerHeartbeat == 0) fail("entries per heartbeat must be positive");
  if (variant == Variant::kRaft) {
    if (raftTimeoutLo <= Duration::zero() || raftTimeoutLo > raftTimeoutHi) {
      fail(fmt::format("raft timeout range [{}, {}] ms is empty", to_ms(raftTimeoutLo),
                       to_ms(raftTimeoutHi)));
    }
    if (raftTimeoutLo <= maxLatency) fail("raft timeouts must exceed the maximum latency");
    if (heartbeatInterval >= raftTimeoutLo) {
      fail("heartbeat interval must be below the minimum election timeout");
    }
  } else {
    if (baseTime <= maxLatency) fail("base time must exceed the maximum latency");
    if (spacing < Duration::zero()) fail("timeout spacing must be non-negative");
    if (heartbeatInterval >= baseTime) {
      fail("heartbeat interval must be below the minimum election timeout");
    }
  }
}

}  // namespace escape
