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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "commands.h"
#include "results_io.h"
#include "scenario_file.h"

namespace escape::cli {
namespace {

namespace fs = std::filesystem;

const fs::path kScenarios = fs::path(ESCAPE_SOURCE_DIR) / "scenarios";

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("escape_cli_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string parse_error(std::string_view yaml) {
  try {
    parse_scenario(yaml, "s.yaml");
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
    return e.what();
  }
  return "";
}

TEST(ScenarioFile, ReadsEveryKey) {
  auto s = parse_scenario(R"(
name: demo
variant: raft
n: 9
trials: 12
seed: 77
base_time_ms: 1400
k_ms: 300
raft_timeout_range_ms: [1600, 2100]
heartbeat_ms: 400
latency_ms: [50, 90]
loss_rate: 0.1
loss_on_replies: true
crash_schedule: [[0, 0], [4, 250]]
recover_schedule: [[4, 3000]]
candidate_crashes: 1
forced_phases: 2
horizon_ms: 9000
)");
  EXPECT_EQ(s.name, "demo");
  EXPECT_EQ(s.params.variant, Variant::kRaft);
  EXPECT_EQ(s.params.n, 9u);
  EXPECT_EQ(s.trials, 12u);
  EXPECT_EQ(s.baseSeed, 77u);
  EXPECT_EQ(s.params.baseTime, millis(1400));
  EXPECT_EQ(s.params.spacing, millis(300));
  EXPECT_EQ(s.params.raftTimeoutLo, millis(1600));
  EXPECT_EQ(s.params.raftTimeoutHi, millis(2100));
  EXPECT_EQ(s.params.heartbeatInterval, millis(400));
  EXPECT_EQ(s.latency.min, millis(50));
  EXPECT_EQ(s.latency.max, millis(90));
  EXPECT_DOUBLE_EQ(s.lossRate, 0.1);
  EXPECT_TRUE(s.lossOnReplies);
  EXPECT_EQ(s.crashes, (std::vector<harness::TimedFault>{{0, millis(0)}, {4, millis(250)}}));
  EXPECT_EQ(s.recoveries, (std::vector<harness::TimedFault>{{4, millis(3000)}}));
  EXPECT_EQ(s.candidateCrashes, 1u);
  EXPECT_EQ(s.forcedPhases, 2u);
  EXPECT_EQ(s.horizon, millis(9000));
}

TEST(ScenarioFile, DefaultsMatchBaseCluster) {
  auto s = parse_scenario("variant: escape\nn: 5\n");
  EXPECT_EQ(s.params.baseTime, millis(1500));
  EXPECT_EQ(s.params.spacing, millis(500));
  EXPECT_EQ(s.latency.min, millis(100));
  EXPECT_EQ(s.latency.max, millis(200));
  EXPECT_EQ(s.crashes.size(), 1u);
  EXPECT_EQ(s.trials, 1u);
}

TEST(ScenarioFile, ErrorsNameLineAndKey) {
  EXPECT_EQ(parse_error("variant: escape\nn: 5\ncolour: red\n"), "s.yaml:3: colour: unknown key");
  EXPECT_EQ(parse_error("variant: escape\nn: 5\nk_ms: 0\n"),
            "s.yaml:3: k_ms: 0 outside [1, 1000000000]");
  EXPECT_EQ(parse_error("variant: paxos\nn: 5\n"),
            "s.yaml:1: variant: 'paxos' is not raft, zraft or escape");
  EXPECT_EQ(parse_error("variant: escape\nn: five\n"), "s.yaml:2: n: 'five' is not an integer");
  EXPECT_EQ(parse_error("n: 5\n"), "s.yaml:1: variant: required key is missing");
  EXPECT_EQ(parse_error("variant: raft\nn: 5\nraft_timeout_range_ms: [2000, 1500]\n"),
            "s.yaml:3: raft_timeout_range_ms: low 2000 exceeds high 1500");
  EXPECT_EQ(parse_error("variant: raft\nn: 5\nlatency_ms: 100\n"),
            "s.yaml:3: latency_ms: expected [low, high]");
  EXPECT_EQ(parse_error("variant: raft\nn: 5\n\nloss_rate: 1.5\n"),
            "s.yaml:4: loss_rate: 1.5 outside [0, 1)");
  EXPECT_NE(parse_error("variant: raft\nn: 5\ncrash_schedule: [[7, 0]]\n").find("crash_schedule"),
            std::string::npos);
  EXPECT_NE(parse_error("variant: [raft\n").find("s.yaml:"), std::string::npos);
  EXPECT_NE(parse_error("variant: escape\nn: 5\nforced_phases: 3\nn_extra: 1\n").find("n_extra"),
            std::string::npos);
}

TEST(ScenarioFile, OverridesWin) {
  auto s = load_scenario(kScenarios / "escape_n5_crash.yaml");
  apply_overrides(s, {Variant::kZRaft, 9u, 3u, 5u, 0.2});
  EXPECT_EQ(s.params.variant, Variant::kZRaft);
  EXPECT_EQ(s.params.n, 9u);
  EXPECT_EQ(s.trials, 3u);
  EXPECT_EQ(s.baseSeed, 5u);
  EXPECT_DOUBLE_EQ(s.lossRate, 0.2);
  EXPECT_THROW(apply_overrides(s, {std::nullopt, std::nullopt, std::nullopt, std::nullopt, 1.2}),
               Error);
}

TEST(ScenarioFile, ShippedScenariosParse) {
  std::size_t count = 0;
  for (const auto& entry : fs::directory_iterator(kScenarios)) {
    EXPECT_NO_THROW(load_scenario(entry.path())) << entry.path();
    ++count;
  }
  EXPECT_GE(count, 3u);
}

TEST(ResultsCsv, RoundTripIsExact) {
  auto s = harness::force_competing_phases(load_scenario(kScenarios / "raft_n5_crash.yaml"), 1);
  s.trials = 40;
  auto ex = harness::run_experiment(s);
  harness::TrialResult odd;
  odd.trial = 4000000000u;
  odd.variant = Variant::kZRaft;
  odd.n = 128;
  odd.seed = 18446744073709551615ull;
  odd.detection = Duration{1};
  odd.election = Duration{999};
  odd.total = Duration{1000};
  odd.messages = 123456789012ull;
  ex.results.push_back(odd);

  std::stringstream buf;
  write_results_csv(buf, ex.results);
  auto text = buf.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), kCsvHeader);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 42);
  EXPECT_NE(text.find(",0.001,0.999,1.000,"), std::string::npos);
  auto back = read_results_csv(buf);
  EXPECT_EQ(back, ex.results);
}

TEST(ResultsCsv, ParseErrorsNameTheField) {
  auto parse = [](const std::string& row) -> std::string {
    std::stringstream in(std::string(kCsvHeader) + "\n" + row + "\n");
    try {
      read_results_csv(in);
    } catch (const Error& e) {
      return e.what();
    }
    return "";
  };
  EXPECT_EQ(parse("0,raft,5,1,true,1.000,2.000,3.000,1,0,2,7"), "");
  EXPECT_EQ(parse("0,raft,5,1,yes,1.000,2.000,3.000,1,0,2,7"),
            "results csv:2: converged: 'yes' is not true or false");
  EXPECT_EQ(parse("0,raft,5,1,true,1.5,2.000,3.000,1,0,2,7"),
            "results csv:2: detection_ms: '1.5' is not a millisecond value with three decimals");
  EXPECT_EQ(parse("0,bft,5,1,true,1.000,2.000,3.000,1,0,2,7"),
            "results csv:2: variant: unknown variant 'bft'");
  EXPECT_EQ(parse("0,raft,5"), "results csv:2: trial: expected 12 fields, found 3");
  std::stringstream noHeader("trial,n\n");
  EXPECT_THROW(read_results_csv(noHeader), Error);
}

TEST(Summary, JsonMirrorsStats) {
  auto s = load_scenario(kScenarios / "escape_n5_crash.yaml");
  s.trials = 10;
  auto ex = harness::run_experiment(s);
  auto j = nlohmann::json::parse(summary_json("x", ex));
  EXPECT_EQ(j["label"], "x");
  EXPECT_EQ(j["trials"], 10);
  EXPECT_EQ(j["converged"], ex.stats.converged);
  EXPECT_DOUBLE_EQ(j["mean_ms"].get<double>(), ex.stats.mean);
  EXPECT_DOUBLE_EQ(j["p99_ms"].get<double>(), ex.stats.p99);
  EXPECT_EQ(j["split_vote_rate"], 0.0);
  EXPECT_EQ(j["cdf"].size(), ex.stats.cdf.size());
  EXPECT_EQ(j["invariants"].size(), check::kInvariantCount);
  EXPECT_TRUE(j["first_violation_seed"].is_null());
}

TEST(Commands, RunWritesResults) {
  auto out = scratch_dir("run");
  CommandOptions opt;
  opt.outDir = out;
  ScenarioOverrides ov;
  ov.trials = 20;
  ASSERT_EQ(cmd_run(kScenarios / "escape_n5_crash.yaml", ov, opt), kExitOk);
  std::ifstream csv(out / "results.csv");
  auto rows = read_results_csv(csv);
  EXPECT_EQ(rows.size(), 20u);
  std::ifstream js(out / "summary.json");
  auto j = nlohmann::json::parse(js);
  EXPECT_EQ(j["split_vote_rate"], 0.0);
  EXPECT_FALSE(fs::exists(out / "traces"));
  fs::remove_all(out);
}

TEST(Commands, SingleTrialTrace) {
  auto out = scratch_dir("trace");
  CommandOptions opt;
  opt.outDir = out;
  opt.trace = true;
  ScenarioOverrides ov;
  ov.trials = 1;
  ASSERT_EQ(cmd_run(kScenarios / "escape_n5_crash.yaml", ov, opt), kExitOk);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(out / "traces")) files.push_back(e.path());
  ASSERT_EQ(files.size(), 1u);
  std::ifstream in(files[0]);
  std::string first;
  std::getline(in, first);
  EXPECT_EQ(nlohmann::json::parse(first)["k"], "init");
  fs::remove_all(out);
}

TEST(Commands, LossRaisesCampaigns) {
  auto base = scratch_dir("loss0");
  auto lossy = scratch_dir("loss40");
  CommandOptions opt;
  ScenarioOverrides ov;
  ov.trials = 50;
  ov.lossRate = 0.0;
  opt.outDir = base;
  ASSERT_EQ(cmd_run(kScenarios / "raft_n10_loss40.yaml", ov, opt), kExitOk);
  ov.lossRate.reset();
  opt.outDir = lossy;
  ASSERT_EQ(cmd_run(kScenarios / "raft_n10_loss40.yaml", ov, opt), kExitOk);
  auto campaigns = [](const fs::path& dir) {
    std::ifstream js(dir / "summary.json");
    return nlohmann::json::parse(js)["mean_campaigns"].get<double>();
  };
  EXPECT_GT(campaigns(lossy), campaigns(base));
  fs::remove_all(base);
  fs::remove_all(lossy);
}

TEST(Commands, ParseErrorIsUsageExit) {
  auto dir = scratch_dir("bad");
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "bad.yaml");
    f << "variant: escape\nn: 5\nbogus: 1\n";
  }
  CommandOptions opt;
  opt.outDir = dir / "out";
  EXPECT_EQ(cmd_run(dir / "bad.yaml", {}, opt), kExitUsage);
  EXPECT_EQ(cmd_run(dir / "missing.yaml", {}, opt), kExitUsage);
  EXPECT_FALSE(fs::exists(dir / "out"));
  fs::remove_all(dir);
}

TEST(Commands, UnknownSuiteIsUsageExit) {
  CommandOptions opt;
  opt.outDir = scratch_dir("suite");
  EXPECT_EQ(cmd_suite("E7", opt), kExitUsage);
}

TEST(Commands, ViolationGivesNonzeroExit) {
  harness::ExperimentResult ex;
  ex.report = check::empty_report();
  EXPECT_EQ(violation_exit_status("x", ex), kExitOk);
  ex.report.results[static_cast<std::size_t>(check::Invariant::kSingleVote)].violations = 1;
  ex.firstViolationSeed = 1234;
  ::testing::internal::CaptureStderr();
  EXPECT_EQ(violation_exit_status("x", ex), kExitViolation);
  auto err = ::testing::internal::GetCapturedStderr();
  EXPECT_NE(err.find("single_vote"), std::string::npos);
  EXPECT_NE(err.find("1234"), std::string::npos);
}

TEST(Commands, GoldenSuiteWritesTraces) {
  CommandOptions opt;
  opt.outDir = scratch_dir("golden");
  ::testing::internal::CaptureStdout();
  EXPECT_EQ(cmd_suite("golden", opt), kExitOk);
  auto table = ::testing::internal::GetCapturedStdout();
  EXPECT_NE(table.find("| split_vote | yes | S3 |"), std::string::npos);
  EXPECT_TRUE(fs::exists(opt.outDir / "split_vote.jsonl"));
  EXPECT_TRUE(fs::exists(opt.outDir / "concurrent_campaign.jsonl"));
  fs::remove_all(opt.outDir);
}

TEST(Commands, SuiteWritesComparisonTable) {
  CommandOptions opt;
  opt.outDir = scratch_dir("e2");
  opt.trials = 5;
  ::testing::internal::CaptureStdout();
  ::testing::internal::CaptureStderr();
  EXPECT_EQ(cmd_suite("e2", opt), kExitOk);
  auto table = ::testing::internal::GetCapturedStdout();
  ::testing::internal::GetCapturedStderr();
  EXPECT_NE(table.find("e2_raft_1500_1800"), std::string::npos);
  EXPECT_TRUE(fs::exists(opt.outDir / "comparison.md"));
  EXPECT_TRUE(fs::exists(opt.outDir / "e2_raft_1500_2300" / "results.csv"));
  fs::remove_all(opt.outDir);
}

}  // namespace
}  // namespace escape::cli
