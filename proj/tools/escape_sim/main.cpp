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

#include <cstdint>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "commands.h"

int main(int argc, char** argv) {
  using namespace escape;
  CLI::App app{"Discrete-event simulator for prioritized leader election"};
  app.require_subcommand(1);

  cli::CommandOptions options;
  options.workers = std::max(1u, std::thread::hardware_concurrency());
  std::string out = "results";
  std::optional<std::uint32_t> trials;
  std::optional<std::uint64_t> seed;

  auto addCommon = [&](CLI::App* cmd) {
    cmd->add_option("--out", out, "Output directory")->capture_default_str();
    cmd->add_option("--trials", trials, "Trials per scenario")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", seed, "Base seed; trial i uses seed ^ i");
    cmd->add_option("--workers", options.workers, "Parallel trial workers")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_flag("--trace", options.trace, "Write one JSONL trace per trial");
  };

  std::string scenarioPath;
  std::optional<std::uint32_t> n;
  std::optional<std::string> variant;
  std::optional<double> lossRate;
  auto* run = app.add_subcommand("run", "Run one scenario file");
  run->add_option("scenario", scenarioPath, "Scenario YAML file")->required();
  addCommon(run);
  run->add_option("--n", n, "Cluster size")->check(CLI::PositiveNumber);
  run->add_option("--variant", variant, "raft, zraft or escape");
  run->add_option("--loss-rate", lossRate, "Broadcast loss rate in [0, 1)");

  std::string suiteName;
  auto* suite = app.add_subcommand("suite", "Run a named suite: E1, E2, E3, E4, liveness, golden");
  suite->add_option("name", suiteName, "Suite name")->required();
  addCommon(suite);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? cli::kExitOk : cli::kExitUsage;
  }
  options.outDir = out;

  try {
    if (*run) {
      cli::ScenarioOverrides overrides{std::nullopt, n, trials, seed, lossRate};
      if (variant) {
        overrides.variant = parse_variant(*variant);
        if (!overrides.variant) {
          fmt::print(stderr, "error: --variant: '{}' is not raft, zraft or escape\n", *variant);
          return cli::kExitUsage;
        }
      }
      return cli::cmd_run(scenarioPath, overrides, options);
    }
    options.trials = trials;
    options.seed = seed;
    return cli::cmd_suite(suiteName, options);
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return cli::kExitUsage;
  }
}
