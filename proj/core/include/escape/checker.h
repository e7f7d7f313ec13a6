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

// Offline invariant checking over a complete trace.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "escape/trace.h"
#include "escape/types.h"

namespace escape::check {

enum class Invariant : std::uint8_t {
  kElectionSafety,
  kTermMonotonicity,
  kSingleVote,
  kTermJump,
  kTimeoutFormula,
  kLogMatching,
  kConfigUniqueness,
  kCrashOpacity,
  kOneCampaign,
  kLivenessBound,
  kCampaignMessages,
  kBestCaseMessages,
};

inline constexpr std::size_t kInvariantCount = 12;

std::string_view to_string(Invariant inv);

struct InvariantResult {
  Invariant invariant{};
  std::uint64_t checked = 0;     // how many times the property was evaluated
  std::uint64_t violations = 0;
  std::string firstViolation;    // empty when clean
};

struct CheckReport {
  std::vector<InvariantResult> results;  // one per Invariant, in enum order

  bool ok() const;
  const InvariantResult& get(Invariant inv) const {
    return results.at(static_cast<std::size_t>(inv));
  }
  /// Folds another report in (counts add, first violation kept).
  void merge(const CheckReport& other);
};

CheckReport empty_report();

struct CheckContext {
  ProtocolParams params;
  // Instant the fault schedule was applied. Campaign-level properties look
  // only at what happens from here on.
  std::optional<TimePoint> injection;
  // Instant the converged leader took office, if any.
  std::optional<TimePoint> electedAt;
  // Fault-free after the leader crash: one campaign must suffice.
  bool oneCampaignApplies = false;
  // Lossless prioritized election: at most f + 1 campaigns to a winner.
  bool livenessApplies = false;
};

CheckReport check_trace(const Trace& trace, const CheckContext& ctx);

}  // namespace escape::check
