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

#include "escape/ppf.h"

#include <algorithm>
#include <functional>

#include <fmt/core.h>

#include "escape/protocol.h"

namespace escape::ppf {

ResponsivenessTracker::ResponsivenessTracker(std::span<const ServerId> followers) {
  records_.reserve(followers.size());
  for (ServerId id : followers) records_.push_back(FollowerRecord{.server = id});
  std::sort(records_.begin(), records_.end(),
            [](const FollowerRecord& a, const FollowerRecord& b) { return a.server < b.server; });
}

const FollowerRecord* ResponsivenessTracker::find(ServerId id) const {
  auto it = std::lower_bound(records_.begin(), records_.end(), id,
                             [](const FollowerRecord& r, ServerId key) { return r.server < key; });
  if (it == records_.end() || it->server != id) return nullptr;
  return &*it;
}

RecordOutcome ResponsivenessTracker::record_reply(ServerId from, const ConfigStatus& status,
                                                  std::uint64_t answeredClock) {
  auto* record = const_cast<FollowerRecord*>(find(from));
  if (record == nullptr) return RecordOutcome::kUnknownServer;
  if (record->everResponded && answeredClock < record->lastReplyClock) {
    return RecordOutcome::kStale;
  }
  record->lastReportedLogIndex = std::max(record->lastReportedLogIndex, status.logIndex);
  record->lastReplyClock = answeredClock;
  record->everResponded = true;
  return RecordOutcome::kUpdated;
}

std::uint64_t clock_epoch(Term term) { return term.value << 32; }

ConfigAssignment initial_assignment(const ProtocolParams& params, ServerId leader,
                                    std::uint64_t clock) {
  // The leader keeps priority 1 for itself; followers share [2, n].
  ConfigAssignment out{.clock = clock, .mapping = {}};
  std::uint32_t priority = params.n;
  for (std::uint32_t id = params.n; id >= 1; --id) {
    if (ServerId{id} == leader) continue;
    out.mapping.emplace(ServerId{id},
                        Configuration{priority,
                                      protocol::compute_election_timeout(params, priority), clock});
    --priority;
  }
  return out;
}

ConfigAssignment rearrange_configurations(const ResponsivenessTracker& tracker,
                                          const ConfigAssignment& current,
                                          const ProtocolParams& params) {
  struct Candidate {
    ServerId id;
    bool responded;
    std::uint64_t logIndex;
    std::uint64_t replyClock;
    std::uint32_t previousPriority;
  };

  std::vector<Candidate> ranked;
  std::vector<std::uint32_t> pool;
  ranked.reserve(current.mapping.size());
  pool.reserve(current.mapping.size());
  for (const auto& [id, config] : current.mapping) {
    const FollowerRecord* r = tracker.find(id);
    bool responded = r != nullptr && r->everResponded;
    ranked.push_back(Candidate{id, responded, responded ? r->lastReportedLogIndex : 0,
                               responded ? r->lastReplyClock : 0, config.priority});
    pool.push_back(config.priority);
  }

  std::sort(ranked.begin(), ranked.end(), [](const Candidate& a, const Candidate& b) {
    if (a.responded != b.responded) return a.responded;
    if (a.logIndex != b.logIndex) return a.logIndex > b.logIndex;
    if (a.replyClock != b.replyClock) return a.replyClock > b.replyClock;
    if (a.previousPriority != b.previousPriority) return a.previousPriority > b.previousPriority;
    return a.id < b.id;
  });
  std::sort(pool.begin(), pool.end(), std::greater<>());

  ConfigAssignment next{.clock = current.clock + 1, .mapping = {}};
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    next.mapping.emplace(ranked[i].id,
                         Configuration{pool[i], protocol::compute_election_timeout(params, pool[i]),
                                       next.clock});
  }
  return next;
}

Configuration piggyback(const ConfigAssignment& assignment, ServerId target) {
  auto it = assignment.mapping.find(target);
  if (it == assignment.mapping.end()) {
    throw Error(ErrorCode::kMissingAssignment,
                fmt::format("server {} holds no follower configuration at clock {}",
                            target.value, assignment.clock));
  }
  return it->second;
}

}  // namespace escape::ppf
