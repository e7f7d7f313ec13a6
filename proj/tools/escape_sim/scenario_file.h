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
#include <string_view>

#include "escape/harness.h"

namespace escape::cli {

/// Command-line values that replace the scenario file's.
struct ScenarioOverrides {
  std::optional<Variant> variant;
  std::optional<std::uint32_t> n;
  std::optional<std::uint32_t> trials;
  std::optional<std::uint64_t> seed;
  std::optional<double> lossRate;
};

/// Parses a YAML scenario. Errors throw Error(kParse) with a message of the
/// form "<source>:<line>: <key>: <problem>".
harness::Scenario parse_scenario(std::string_view text, std::string_view source = "<scenario>");

harness::Scenario load_scenario(const std::filesystem::path& path);

/// Overrides win over file values. The result is validated again.
void apply_overrides(harness::Scenario& scenario, const ScenarioOverrides& overrides);

}  // namespace escape::cli
