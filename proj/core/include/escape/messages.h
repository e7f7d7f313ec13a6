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

#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "escape/types.h"

namespace escape {

struct LogEntry {
  Term term;
  std::uint64_t index = 0;
  std::vector<std::uint8_t> payload;

  friend bool operator==(const LogEntry&, const LogEntry&) = default;
};

struct LogPosition {
  std::uint64_t index = 0;
  Term term;
};

struct AppendEntriesArgs {
  Term term;
  ServerId leaderId;
  std::uint64_t prevLogIndex = 0;
  Term prevLogTerm;
  std::vector<LogEntry> entries;
  std::uint64_t leaderCommit = 0;
  // Present only when the leader runs configuration rearrangement.
  std::optional<Configuration> newConfig;
};

struct ConfigStatus {
  // On success: last index known to match the leader. On failure: the
  // follower's last log index, used by the leader as a backtracking hint.
  std::uint64_t logIndex = 0;
  Duration timerPeriod{};
};

struct AppendEntriesReply {
  Term term;
  bool success = false;
  ConfigStatus status;
  // Configuration clock of the heartbeat round this reply answers.
  std::uint64_t answeredClock = 0;
};

struct RequestVoteArgs {
  Term term;
  ServerId candidateId;
  std::uint64_t lastLogIndex = 0;
  Term lastLogTerm;
  // Carried only by Escape candidates with clock checks enabled.
  std::optional<std::uint64_t> confClock;
};

struct RequestVoteReply {
  Term term;
  bool voteGranted = false;
};

using Message =
    std::variant<AppendEntriesArgs, AppendEntriesReply, RequestVoteArgs, RequestVoteReply>;

enum class MessageKind : std::uint8_t {
  kAppendEntries,
  kAppendEntriesReply,
  kRequestVote,
  kRequestVoteReply,
};

inline MessageKind kind_of(const Message& m) { return static_cast<MessageKind>(m.index()); }
std::string_view to_string(MessageKind k);
Term term_of(const Message& m);

struct Envelope {
  ServerId from;
  ServerId to;
  Message msg;
};

}  // namespace escape
