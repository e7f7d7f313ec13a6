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
#include <filesystem>
#include <optional>
#include <string>

#include "scenario_file.h"

namespace escape::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitViolation = 1;
inline constexpr int kExitUsage = 2;

struct CommandOptions {
  std::filesystem::path outDir = "results";
  std::uint32_t workers = 1;
  bool trace = false;
  // Only consulted by cmd_suite; cmd_run takes these through overrides.
  std::optional<std::uint32_t> trials;
  std::optional<std::uint64_t> seed;
};

/// kExitViolation if any invariant failed anywhere in the experiment, after
/// reporting each failed invariant with the seed of the first failing trial.
int violation_exit_status(const std::string& label, const harness::ExperimentResult& result);

/// Runs one scenario file. Writes results.csv and summary.json to the output
/// directory, and traces/ when tracing is on.
int cmd_run(const std::filesystem::path& scenarioPath, const ScenarioOverrides& overrides,
            const CommandOptions& options);

/// Runs a named suite (E1..E4, liveness or golden) into one subdirectory per
/// scenario and writes comparison.md next to them.
int cmd_suite(const std::string& suiteName, const CommandOptions& options);

}  // namespace escape::cli
