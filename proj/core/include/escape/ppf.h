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

// Leader-side probing patrol: follower responsiveness tracking and the
// per-heartbeat rearrangement of prioritized configurations.

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "escape/messages.h"
#include "escape/types.h"

namespace escape::ppf {

struct FollowerRecord {
  ServerId server;
  std::uint64_t lastReportedLogIndex = 0;
  // Configuration clock of the round the latest accepted reply answered.
  std::uint64_t lastReplyClock = 0;
  bool everResponded = false;
};

enum class RecordOutcome : std::uint8_t { kUpdated, kStale, kUnknownServer };

class ResponsivenessTracker {
 public:
  ResponsivenessTracker() = default;
  explicit ResponsivenessTracker(std::span<const ServerId> followers);

  /// Applies a reply unless it answers an older round than the one already
  /// recorded. The reported log index never decreases.
  RecordOutcome record_reply(ServerId from, const ConfigStatus& status,
                             std::uint64_t answeredClock);

  const FollowerRecord* find(ServerId id) const;
  std::span<const FollowerRecord> records() const { return records_; }

 private:
  std::vector<FollowerRecord> records_;  // sorted by server id
};

/// One rearrangement: every follower's configuration at a single clock.
struct ConfigAssignment {
  std::uint64_t clock = 0;
  std::map<ServerId, Configuration> mapping;

  friend bool operator==(const ConfigAssignment&, const ConfigAssignment&) = default;
};

/// Lowest configuration clock a leader elected in `term` may issue. Clocks
/// issued under different terms never overlap and grow with the term.
std::uint64_t clock_epoch(Term term);

/// The view a freshly elected leader starts from: the follower priority pool
/// laid out by server id, highest id on the highest priority.
ConfigAssignment initial_assignment(const ProtocolParams& params, ServerId leader,
                                    std::uint64_t clock);

/// Ranks followers by (reported log index desc, reply clock desc, previous
/// priority desc, id asc), hands out the pool of priorities held in `current`
/// in descending order, and advances the clock by one. Followers that never
/// answered rank below every responder.
ConfigAssignment rearrange_configurations(const ResponsivenessTracker& tracker,
                                          const ConfigAssignment& current,
                                          const ProtocolParams& params);

/// Configuration to piggyback on the heartbeat for `target`.
/// Throws Error(kMissingAssignment) if `target` holds no follower slot.
Configuration piggyback(const ConfigAssignment& assignment, ServerId target);

}  // namespace escape::ppf
