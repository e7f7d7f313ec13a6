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

// Named experiment matrices and the two scripted election scenarios.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "escape/checker.h"
#include "escape/harness.h"
#include "escape/trace.h"

namespace escape::suites {

struct SuiteEntry {
  std::string label;  // unique within the suite, filesystem-safe
  harness::Scenario scenario;
};

inline constexpr std::uint32_t kDefaultTrials = 1000;
inline constexpr std::uint64_t kDefaultSeed = 20260101;

/// Cluster defaults shared by the suites: 500 ms heartbeats, one-way
/// latency uniform in [100, 200] ms, prioritized timeouts 1500 + 500 * (n - P).
harness::Scenario base_scenario(Variant variant, std::uint32_t n);

std::vector<SuiteEntry> leader_crash_suite(std::uint32_t trials, std::uint64_t seed);
std::vector<SuiteEntry> randomness_suite(std::uint32_t trials, std::uint64_t seed);
std::vector<SuiteEntry> competing_phases_suite(std::uint32_t trials, std::uint64_t seed);
std::vector<SuiteEntry> message_loss_suite(std::uint32_t trials, std::uint64_t seed);

/// Escape leader crash followed by crashes of the next f - 1 campaign
/// starters, f = floor((n - 1) / 2).
std::vector<SuiteEntry> adversarial_liveness_suite(std::uint32_t trials, std::uint64_t seed);

inline const std::vector<std::uint32_t> kScales{8, 16, 32, 64, 128};
inline const std::vector<std::uint32_t> kRaftRangeHighsMs{1800, 1900, 2000, 2100, 2200, 2300};
inline const std::vector<double> kLossRates{0.0, 0.1, 0.2, 0.3, 0.4};
inline const std::vector<std::uint32_t> kLossScales{10, 50, 100};

/// E1..E4 or "liveness" by name (case-insensitive); nullopt for an unknown name.
std::optional<std::vector<SuiteEntry>> make_suite(std::string_view name, std::uint32_t trials,
                                                  std::uint64_t seed);

struct GoldenOutcome {
  std::string name;
  bool matched = false;
  std::string detail;
  ServerId winner;
  Term winnerTerm;
  std::uint32_t campaigns = 0;
  std::uint32_t winningCampaigns = 0;
  std::uint32_t splitVotePhases = 0;
  check::CheckReport report;
  Trace trace;
};

/// Seed under which the split-vote scenario plays out as scripted.
inline constexpr std::uint64_t kSplitVoteSeed = 2;

/// Raft, n = 5: the leader crashes, S3 and S4 time out together, S2 backs
/// S3 and S5 backs S4, nobody wins, and S3 wins the following term.
GoldenOutcome split_vote_scenario(std::uint64_t seed = kSplitVoteSeed);

/// Escape, n = 5: S2, S3 and S4 campaign at the same instant, S4 holding a
/// stale configuration clock. S3 carries the highest term and wins in one
/// campaign.
GoldenOutcome concurrent_campaign_scenario(std::uint64_t seed = 1);

std::vector<GoldenOutcome> golden_suite();

/// Escape with every priority forced to 1 and Raft with a fixed timeout of
/// the same length, run from the same seeded start and fault script.
struct DegeneracyCase {
  Trace escape;
  Trace raft;
};

DegeneracyCase degeneracy_case(std::uint64_t seed, std::uint32_t n = 5);

}  // namespace escape::suites
