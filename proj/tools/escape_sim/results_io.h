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

// Results documents: per-trial CSV, summary JSON and the suite comparison table.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "escape/harness.h"

namespace escape::cli {

inline constexpr const char* kCsvHeader =
    "trial,variant,n,seed,converged,detection_ms,election_ms,total_ms,campaigns,"
    "split_vote_phases,winner,messages";

/// Durations are written in milliseconds with exactly three decimals, so the
/// microsecond values survive a round trip.
void write_results_csv(std::ostream& out, const std::vector<harness::TrialResult>& results);

/// Throws Error(kParse) naming the line and column of the first bad field.
std::vector<harness::TrialResult> read_results_csv(std::istream& in);

/// Pretty-printed JSON mirroring SummaryStats plus scenario identity, checker
/// counts and the CDF points.
std::string summary_json(const std::string& label, const harness::ExperimentResult& experiment);

struct ComparisonRow {
  std::string label;
  harness::ExperimentResult experiment;
};

/// Markdown table, one row per scenario of a suite.
std::string comparison_table(const std::vector<ComparisonRow>& rows);

}  // namespace escape::cli
