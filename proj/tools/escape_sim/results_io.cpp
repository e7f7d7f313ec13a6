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

#include "results_io.h"

#include <charconv>
#include <istream>
#include <ostream>
#include <string_view>

#include <fmt/format.h>
#include <json.hpp>

namespace escape::cli {

namespace {

std::string format_ms(Duration d) {
  auto us = d.count();
  const char* sign = us < 0 ? "-" : "";
  if (us < 0) us = -us;
  return fmt::format("{}{}.{:03}", sign, us / 1000, us % 1000);
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

class RowParser {
 public:
  RowParser(std::size_t line) : line_(line) {}

  [[noreturn]] void fail(std::size_t column, std::string_view what) const {
    throw Error(ErrorCode::kParse, fmt::format("results csv:{}: {}: {}", line_,
                                               split(kCsvHeader, ',').at(column), what));
  }

  template <typename T>
  T unsigned_field(std::string_view text, std::size_t column) const {
    T v{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
      fail(column, fmt::format("'{}' is not an unsigned integer", text));
    }
    return v;
  }

  Duration ms_field(std::string_view text, std::size_t column) const {
    auto dot = text.find('.');
    if (dot == std::string_view::npos || text.size() - dot != 4) {
      fail(column, fmt::format("'{}' is not a millisecond value with three decimals", text));
    }
    auto whole = unsigned_field<std::int64_t>(text.substr(0, dot), column);
    auto frac = unsigned_field<std::int64_t>(text.substr(dot + 1), column);
    return Duration{whole * 1000 + frac};
  }

 private:
  std::size_t line_;
};

}  // namespace

void write_results_csv(std::ostream& out, const std::vector<harness::TrialResult>& results) {
  out << kCsvHeader << '\n';
  for (const auto& r : results) {
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", r.trial, to_string(r.variant), r.n,
                       r.seed, r.converged ? "true" : "false", format_ms(r.detection),
                       format_ms(r.election), format_ms(r.total), r.campaigns, r.splitVotePhases,
                       r.winner.value, r.messages);
  }
}

std::vector<harness::TrialResult> read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw Error(ErrorCode::kParse, "results csv:1: header: expected the results header");
  }
  std::vector<harness::TrialResult> out;
  std::size_t lineNo = 1;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty()) continue;
    RowParser p(lineNo);
    auto f = split(line, ',');
    if (f.size() != 12) p.fail(0, fmt::format("expected 12 fields, found {}", f.size()));
    harness::TrialResult r;
    r.trial = p.unsigned_field<std::uint32_t>(f[0], 0);
    auto variant = parse_variant(f[1]);
    if (!variant) p.fail(1, fmt::format("unknown variant '{}'", f[1]));
    r.variant = *variant;
    r.n = p.unsigned_field<std::uint32_t>(f[2], 2);
    r.seed = p.unsigned_field<std::uint64_t>(f[3], 3);
    if (f[4] == "true") {
      r.converged = true;
    } else if (f[4] != "false") {
      p.fail(4, fmt::format("'{}' is not true or false", f[4]));
    }
    r.detection = p.ms_field(f[5], 5);
    r.election = p.ms_field(f[6], 6);
    r.total = p.ms_field(f[7], 7);
    r.campaigns = p.unsigned_field<std::uint32_t>(f[8], 8);
    r.splitVotePhases = p.unsigned_field<std::uint32_t>(f[9], 9);
    r.winner = ServerId{p.unsigned_field<std::uint32_t>(f[10], 10)};
    r.messages = p.unsigned_field<std::uint64_t>(f[11], 11);
    out.push_back(r);
  }
  return out;
}

std::string summary_json(const std::string& label, const harness::ExperimentResult& experiment) {
  const auto& s = experiment.stats;
  const auto& sc = experiment.scenario;
  nlohmann::ordered_json j;
  j["label"] = label;
  j["scenario"] = sc.name;
  j["variant"] = std::string(to_string(sc.params.variant));
  j["n"] = sc.params.n;
  j["base_seed"] = sc.baseSeed;
  j["loss_rate"] = sc.lossRate;
  j["forced_phases"] = sc.forcedPhases;
  j["trials"] = s.trials;
  j["converged"] = s.converged;
  j["mean_ms"] = s.mean;
  j["p50_ms"] = s.p50;
  j["p90_ms"] = s.p90;
  j["p99_ms"] = s.p99;
  j["mean_detection_ms"] = s.meanDetection;
  j["mean_election_ms"] = s.meanElection;
  j["mean_campaigns"] = s.meanCampaigns;
  j["split_vote_rate"] = s.splitVoteRate;
  j["non_convergence_rate"] = s.nonConvergenceRate;
  j["non_convergence_within_3500ms"] = harness::non_convergence_within(experiment.results, 3500.0);
  auto& inv = j["invariants"] = nlohmann::ordered_json::object();
  for (const auto& r : experiment.report.results) {
    inv[std::string(check::to_string(r.invariant))] = {{"checked", r.checked},
                                                        {"violations", r.violations}};
  }
  if (experiment.firstViolationSeed) {
    j["first_violation_seed"] = *experiment.firstViolationSeed;
  } else {
    j["first_violation_seed"] = nullptr;
  }
  auto& cdf = j["cdf"] = nlohmann::ordered_json::array();
  for (const auto& p : s.cdf) cdf.push_back({{"ms", p.ms}, {"fraction", p.fraction}});
  return j.dump(2) + "\n";
}

std::string comparison_table(const std::vector<ComparisonRow>& rows) {
  std::string out =
      "| scenario | variant | n | trials | converged | mean ms | p50 ms | p99 ms | campaigns "
      "| split-vote rate | no leader by 3500 ms | invariants |\n"
      "|---|---|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& row : rows) {
    const auto& e = row.experiment;
    const auto& s = e.stats;
    out += fmt::format("| {} | {} | {} | {} | {} | {:.1f} | {:.1f} | {:.1f} | {:.2f} | {:.3f} | {:.3f} | {} |\n",
                       row.label, to_string(e.scenario.params.variant), e.scenario.params.n,
                       s.trials, s.converged, s.mean, s.p50, s.p99, s.meanCampaigns,
                       s.splitVoteRate, harness::non_convergence_within(e.results, 3500.0),
                       e.report.ok() ? "ok" : "VIOLATED");
  }
  return out;
}

}  // namespace escape::cli
