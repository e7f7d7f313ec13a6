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

#include "commands.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <mutex>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "escape/suites.h"
#include "results_io.h"

namespace escape::cli {

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kParse, fmt::format("{}: cannot write file", path.string()));
  out << text;
}

std::string trace_file_name(const harness::TrialOutput& t) {
  return fmt::format("trial{:05}_seed{}.jsonl", t.result.trial, t.result.seed);
}

harness::ExperimentResult run_into(const std::string& label, const harness::Scenario& scenario,
                                   const fs::path& dir, const CommandOptions& options) {
  fs::create_directories(dir);
  harness::RunOptions run;
  run.workers = options.workers;
  if (options.trace) {
    fs::create_directories(dir / "traces");
    run.onTrial = [&](const harness::TrialOutput& t) {
      std::ofstream out(dir / "traces" / trace_file_name(t), std::ios::binary);
      t.trace.write_jsonl(out);
    };
  }
  auto result = harness::run_experiment(scenario, run);
  {
    std::ofstream csv(dir / "results.csv", std::ios::binary);
    write_results_csv(csv, result.results);
  }
  write_file(dir / "summary.json", summary_json(label, result));
  return result;
}

int run_golden(const CommandOptions& options) {
  fs::create_directories(options.outDir);
  std::string table = "| scenario | matched | winner | term | campaigns | split-vote phases | invariants |\n"
                      "|---|---|---|---|---|---|---|\n";
  bool ok = true;
  for (const auto& g : suites::golden_suite()) {
    {
      std::ofstream out(options.outDir / (g.name + ".jsonl"), std::ios::binary);
      g.trace.write_jsonl(out);
    }
    table += fmt::format("| {} | {} | S{} | {} | {} | {} | {} |\n", g.name, g.matched ? "yes" : "no",
                         g.winner.value, g.winnerTerm.value, g.campaigns, g.splitVotePhases,
                         g.report.ok() ? "ok" : "VIOLATED");
    if (!g.matched) {
      fmt::print(stderr, "{}: scripted outcome not reproduced: {}\n", g.name, g.detail);
      ok = false;
    }
    for (const auto& r : g.report.results) {
      if (r.violations == 0) continue;
      fmt::print(stderr, "{}: invariant {} violated: {}\n", g.name, check::to_string(r.invariant),
                 r.firstViolation);
      ok = false;
    }
  }
  write_file(options.outDir / "comparison.md", table);
  fmt::print("{}", table);
  return ok ? kExitOk : kExitViolation;
}

}  // namespace

int violation_exit_status(const std::string& label, const harness::ExperimentResult& result) {
  if (result.report.ok()) return kExitOk;
  for (const auto& r : result.report.results) {
    if (r.violations == 0) continue;
    fmt::print(stderr, "{}: invariant {} violated {} time(s); first in trial seed {}: {}\n", label,
               check::to_string(r.invariant), r.violations, result.firstViolationSeed.value_or(0),
               r.firstViolation);
  }
  return kExitViolation;
}

int cmd_run(const fs::path& scenarioPath, const ScenarioOverrides& overrides,
            const CommandOptions& options) {
  harness::Scenario scenario;
  try {
    scenario = load_scenario(scenarioPath);
    apply_overrides(scenario, overrides);
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitUsage;
  }
  auto label = scenario.name;
  auto result = run_into(label, scenario, options.outDir, options);
  const auto& s = result.stats;
  fmt::print("{}: {} trials, {} converged, mean {:.1f} ms, p99 {:.1f} ms, split-vote rate {:.3f}\n",
             label, s.trials, s.converged, s.mean, s.p99, s.splitVoteRate);
  return violation_exit_status(label, result);
}

int cmd_suite(const std::string& suiteName, const CommandOptions& options) {
  std::string lower = suiteName;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "golden") return run_golden(options);

  auto suite = suites::make_suite(lower, options.trials.value_or(suites::kDefaultTrials),
                                  options.seed.value_or(suites::kDefaultSeed));
  if (!suite) {
    fmt::print(stderr, "error: unknown suite '{}' (expected E1, E2, E3, E4, liveness or golden)\n",
               suiteName);
    return kExitUsage;
  }
  std::vector<ComparisonRow> rows;
  bool ok = true;
  for (const auto& entry : *suite) {
    fmt::print(stderr, "running {} ({} trials)\n", entry.label, entry.scenario.trials);
    auto result = run_into(entry.label, entry.scenario, options.outDir / entry.label, options);
    ok = violation_exit_status(entry.label, result) == kExitOk && ok;
    rows.push_back({entry.label, std::move(result)});
  }
  auto table = comparison_table(rows);
  write_file(options.outDir / "comparison.md", table);
  fmt::print("{}", table);
  return ok ? kExitOk : kExitViolation;
}

}  // namespace escape::cli
