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
#include <set>
#include <string_view>
#include <vector>

#include "escape/messages.h"
#include "escape/ppf.h"
#include "escape/types.h"

namespace escape {

enum class Role : std::uint8_t { kFollower, kCandidate, kLeader };

std::string_view to_string(Role r);

/// A vote is keyed by the term it was cast in.
struct Vote {
  Term term;
  ServerId candidate;

  friend bool operator==(const Vote&, const Vote&) = default;
};

// Volatile leader bookkeeping, indexed by server id (slot 0 unused).
struct LeaderState {
  std::vector<std::uint64_t> nextIndex;
  std::vector<std::uint64_t> matchIndex;
  std::vector<bool> accepted;  // follower acknowledged at least one round
  std::uint32_t acceptedCount = 0;
  std::uint64_t rounds = 0;
  ppf::ResponsivenessTracker tracker;
  ppf::ConfigAssignment assignment;
};

struct ServerState {
  ServerId id;
  Role role = Role::kFollower;
  Term currentTerm;
  std::optional<Vote> votedFor;
  std::vector<LogEntry> log;  // log[i] holds index i + 1
  std::uint64_t commitIndex = 0;
  Configuration config;
  TimePoint electionDeadline{};
  std::set<ServerId> votesReceived;
  bool crashed = false;
  std::optional<LeaderState> leader;

  std::uint64_t last_log_index() const { return log.size(); }
  Term term_at(std::uint64_t index) const {
    return index == 0 || index > log.size() ? Term{} : log[index - 1].term;
  }
  LogPosition last_log_position() const { return {last_log_index(), term_at(last_log_index())}; }
};

}  // namespace escape
