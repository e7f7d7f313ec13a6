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

#include "scenario_file.h"

#include <array>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>

#include <fmt/core.h>
#include <yaml-cpp/yaml.h>

#include "escape/suites.h"

namespace escape::cli {

namespace {

constexpr std::array kKnownKeys{
    "name",          "variant",         "n",
    "trials",        "seed",            "base_time_ms",
    "k_ms",          "raft_timeout_range_ms", "heartbeat_ms",
    "latency_ms",    "loss_rate",       "loss_on_replies",
    "crash_schedule", "recover_schedule", "candidate_crashes",
    "forced_phases", "horizon_ms",
};

class Parser {
 public:
  Parser(const YAML::Node& root, std::string_view source) : root_(root), source_(source) {}

  [[noreturn]] void fail(const YAML::Node& at, std::string_view key, std::string_view what) const {
    int line = at.IsDefined() ? at.Mark().line + 1 : root_.Mark().line + 1;
    throw Error(ErrorCode::kParse, fmt::format("{}:{}: {}: {}", source_, std::max(line, 1), key, what));
  }

  std::int64_t integer(const YAML::Node& node, std::string_view key, std::int64_t lo,
                       std::int64_t hi) const {
    if (!node.IsScalar()) fail(node, key, "expected an integer");
    std::int64_t v = 0;
    try {
      v = node.as<std::int64_t>();
    } catch (const YAML::Exception&) {
      fail(node, key, fmt::format("'{}' is not an integer", node.Scalar()));
    }
    if (v < lo || v > hi) fail(node, key, fmt::format("{} outside [{}, {}]", v, lo, hi));
    return v;
  }

  double real(const YAML::Node& node, std::string_view key) const {
    if (!node.IsScalar()) fail(node, key, "expected a number");
    try {
      return node.as<double>();
    } catch (const YAML::Exception&) {
      fail(node, key, fmt::format("'{}' is not a number", node.Scalar()));
    }
  }

  bool boolean(const YAML::Node& node, std::string_view key) const {
    if (!node.IsScalar()) fail(node, key, "expected true or false");
    try {
      return node.as<bool>();
    } catch (const YAML::Exception&) {
      fail(node, key, fmt::format("'{}' is not a boolean", node.Scalar()));
    }
  }

  std::pair<std::int64_t, std::int64_t> range(const YAML::Node& node, std::string_view key,
                                              std::int64_t lo) const {
    if (!node.IsSequence() || node.size() != 2) fail(node, key, "expected [low, high]");
    auto a = integer(node[0], key, lo, kMaxMs);
    auto b = integer(node[1], key, lo, kMaxMs);
    if (a > b) fail(node, key, fmt::format("low {} exceeds high {}", a, b));
    return {a, b};
  }

  std::vector<harness::TimedFault> schedule(const YAML::Node& node, std::string_view key,
                                            std::uint32_t n) const {
    if (!node.IsSequence()) fail(node, key, "expected a list of [server, time_ms] pairs");
    std::vector<harness::TimedFault> out;
    for (const auto& item : node) {
      if (!item.IsSequence() || item.size() != 2) fail(item, key, "expected [server, time_ms]");
      auto server = integer(item[0], key, 0, n);
      auto at = integer(item[1], key, 0, kMaxMs);
      out.push_back({static_cast<std::uint32_t>(server), millis(at)});
    }
    return out;
  }

  harness::Scenario parse() const {
    if (!root_.IsMap()) fail(root_, "<document>", "expected a mapping of scenario keys");
    const std::set<std::string> known(kKnownKeys.begin(), kKnownKeys.end());
    for (const auto& kv : root_) {
      auto key = kv.first.as<std::string>();
      if (!known.contains(key)) fail(kv.first, key, "unknown key");
    }

    const YAML::Node variantNode = root_["variant"];
    if (!variantNode) fail(root_, "variant", "required key is missing");
    if (!variantNode.IsScalar()) fail(variantNode, "variant", "expected raft, zraft or escape");
    auto variant = parse_variant(variantNode.Scalar());
    if (!variant) {
      fail(variantNode, "variant", fmt::format("'{}' is not raft, zraft or escape", variantNode.Scalar()));
    }
    const YAML::Node nNode = root_["n"];
    if (!nNode) fail(root_, "n", "required key is missing");
    auto n = static_cast<std::uint32_t>(integer(nNode, "n", 1, 100000));

    harness::Scenario s = suites::base_scenario(*variant, n);
    s.trials = 1;
    if (auto v = root_["name"]) {
      if (!v.IsScalar() || v.Scalar().empty()) fail(v, "name", "expected a non-empty string");
      s.name = v.Scalar();
    }
    if (auto v = root_["trials"]) s.trials = static_cast<std::uint32_t>(integer(v, "trials", 1, 100'000'000));
    if (auto v = root_["seed"]) {
      s.baseSeed = static_cast<std::uint64_t>(integer(v, "seed", 0, std::numeric_limits<std::int64_t>::max()));
    }
    if (auto v = root_["base_time_ms"]) s.params.baseTime = millis(integer(v, "base_time_ms", 1, kMaxMs));
    if (auto v = root_["k_ms"]) s.params.spacing = millis(integer(v, "k_ms", 1, kMaxMs));
    if (auto v = root_["raft_timeout_range_ms"]) {
      auto [lo, hi] = range(v, "raft_timeout_range_ms", 1);
      s.params.raftTimeoutLo = millis(lo);
      s.params.raftTimeoutHi = millis(hi);
    }
    if (auto v = root_["heartbeat_ms"]) {
      s.params.heartbeatInterval = millis(integer(v, "heartbeat_ms", 1, kMaxMs));
    }
    if (auto v = root_["latency_ms"]) {
      auto [lo, hi] = range(v, "latency_ms", 1);
      s.latency = sim::LatencyModel{millis(lo), millis(hi)};
    }
    if (auto v = root_["loss_rate"]) {
      double loss = real(v, "loss_rate");
      if (!(loss >= 0.0 && loss < 1.0)) fail(v, "loss_rate", fmt::format("{} outside [0, 1)", loss));
      s.lossRate = loss;
    }
    if (auto v = root_["loss_on_replies"]) s.lossOnReplies = boolean(v, "loss_on_replies");
    if (auto v = root_["crash_schedule"]) s.crashes = schedule(v, "crash_schedule", n);
    if (auto v = root_["recover_schedule"]) s.recoveries = schedule(v, "recover_schedule", n);
    if (auto v = root_["candidate_crashes"]) {
      s.candidateCrashes = static_cast<std::uint32_t>(integer(v, "candidate_crashes", 0, n));
    }
    if (auto v = root_["forced_phases"]) {
      s.forcedPhases = static_cast<std::uint32_t>(integer(v, "forced_phases", 0, 3));
    }
    if (auto v = root_["horizon_ms"]) s.horizon = millis(integer(v, "horizon_ms", 1, kMaxMs));

    try {
      s.validate();
    } catch (const Error& e) {
      fail(root_, "<scenario>", e.what());
    }
    return s;
  }

 private:
  static constexpr std::int64_t kMaxMs = 1'000'000'000;
  const YAML::Node& root_;
  std::string_view source_;
};

}  // namespace

harness::Scenario parse_scenario(std::string_view text, std::string_view source) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw Error(ErrorCode::kParse,
                fmt::format("{}:{}: <syntax>: {}", source, e.mark.line + 1, e.msg));
  }
  return Parser(root, source).parse();
}

harness::Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kParse, fmt::format("{}: cannot open file", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.string());
}

void apply_overrides(harness::Scenario& scenario, const ScenarioOverrides& overrides) {
  if (overrides.variant) scenario.params.variant = *overrides.variant;
  if (overrides.n) scenario.params.n = *overrides.n;
  if (overrides.trials) scenario.trials = *overrides.trials;
  if (overrides.seed) scenario.baseSeed = *overrides.seed;
  if (overrides.lossRate) scenario.lossRate = *overrides.lossRate;
  scenario.validate();
}

}  // namespace escape::cli
