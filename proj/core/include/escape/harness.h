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

// Trial runner. A trial boots a cluster from its initial configurations,
// lets a leader settle in, injects the scenario's faults and measures how
// long the cluster takes to elect a replacement.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "escape/checker.h"
#include "escape/simnet.h"
#include "escape/trace.h"
#include "escape/types.h"

namespace escape::harness {

/// A fault relative to the injection instant. Server 0 names whichever
/// server leads when faults are injected.
struct TimedFault {
  std::uint32_t server = 0;
  Duration at{};

  friend bool operator==(const TimedFault&, const TimedFault&) = default;
};

struct Scenario {
  std::string name = "scenario";
  ProtocolParams params;
  sim::LatencyModel latency;
  std::vector<TimedFault> crashes{TimedFault{}};
  std::vector<TimedFault> recoveries;
  double lossRate = 0.0;
  bool lossOnReplies = false;
  // Successive campaign starters crashed right after they broadcast.
  std::uint32_t candidateCrashes = 0;
  std::uint32_t trials = 1;
  std::uint64_t baseSeed = 1;
  std::uint32_t forcedPhases = 0;
  // Measured from the injection instant.
  Duration horizon = millis(20000);
  // Heartbeat rounds the first leader completes before faults go in.
  std::uint32_t stabilizationRounds = 3;

  /// Throws Error(kInvalidScenario) or Error(kInvalidParams).
  void validate() const;
  std::uint64_t trial_seed(std::uint32_t trialIndex) const { return baseSeed ^ trialIndex; }
};

struct TrialResult {
  std::uint32_t trial = 0;
  Variant variant{};
  std::uint32_t n = 0;
  std::uint64_t seed = 0;
  bool converged = false;
  Duration detection{};
  Duration election{};
  Duration total{};
  std::uint32_t campaigns = 0;
  std::uint32_t splitVotePhases = 0;
  ServerId winner;  // zero when not converged
  std::uint64_t messages = 0;

  friend bool operator==(const TrialResult&, const TrialResult&) = default;
};

struct TrialOutput {
  TrialResult result;
  check::CheckReport report;
  Trace trace;
};

/// Runs one trial with seed = baseSeed ^ trialIndex. Invariants are checked
/// on the full trace.
TrialOutput run_trial(const Scenario& scenario, std::uint32_t trialIndex);

struct CdfPoint {
  double ms = 0.0;
  double fraction = 0.0;
};

struct SummaryStats {
  std::uint32_t trials = 0;
  std::uint32_t converged = 0;
  double mean = 0.0;  // over converged trials
  double p50 = 0.0;
  double p90 = 0.0;
  double p99 = 0.0;
  double meanDetection = 0.0;
  double meanElection = 0.0;
  double meanCampaigns = 0.0;
  double splitVoteRate = 0.0;
  double nonConvergenceRate = 0.0;
  std::vector<CdfPoint> cdf;  // fraction of all trials converged by ms
};

inline constexpr double kCdfResolutionMs = 50.0;

SummaryStats summarize(const std::vector<TrialResult>& results);

/// Fraction of trials that did not elect a leader within `withinMs` of the fault.
double non_convergence_within(const std::vector<TrialResult>& results, double withinMs);

struct ExperimentResult {
  Scenario scenario;
  std::vector<TrialResult> results;  // trial index order
  SummaryStats stats;
  check::CheckReport report;
  // Trial seed of the first trial with a violation, if any.
  std::optional<std::uint64_t> firstViolationSeed;
};

struct RunOptions {
  std::uint32_t workers = 1;
  // Called with each trial's output in trial index order, e.g. to persist traces.
  std::function<void(const TrialOutput&)> onTrial;
};

ExperimentResult run_experiment(const Scenario& scenario, const RunOptions& options = {});

/// Pins phases + 1 followers to one election deadline so they campaign
/// concurrently. Throws Error(kInvalidScenario) when the cluster is too small.
Scenario force_competing_phases(Scenario scenario, std::uint32_t phases);

}  // namespace escape::harness
