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

#include "escape/suites.h"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include <fmt/format.h>

#include "escape/protocol.h"
#include "escape/simnet.h"

namespace escape::suites {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

harness::Scenario with_trials(harness::Scenario s, std::uint32_t trials, std::uint64_t seed) {
  s.trials = trials;
  s.baseSeed = seed;
  return s;
}

// Every server holds `entries` entries of `term` and sits at `term`.
std::vector<ServerState> synced_cluster(const ProtocolParams& params, Term term,
                                        std::uint64_t entries, Rng& rng) {
  std::vector<ServerState> states;
  for (std::uint32_t id = 1; id <= params.n; ++id) {
    ServerState s = protocol::make_server(params, ServerId{id}, TimePoint{}, rng);
    s.currentTerm = term;
    for (std::uint64_t i = 1; i <= entries; ++i) {
      s.log.push_back(LogEntry{term, i, protocol::entry_payload(term, i)});
    }
    s.commitIndex = entries;
    states.push_back(std::move(s));
  }
  return states;
}

struct Tally {
  std::uint32_t campaigns = 0;
  std::uint32_t winningCampaigns = 0;
  std::uint32_t splitVotePhases = 0;
  std::optional<std::pair<ServerId, Term>> winner;
  std::map<std::pair<ServerId, Term>, ServerId> votes;  // (voter, term) -> candidate
};

Tally tally(const Trace& trace) {
  Tally t;
  std::map<Term, std::uint32_t> perTerm;
  std::set<Term> led;
  for (const auto& r : trace.records()) {
    if (const auto* c = std::get_if<rec::CampaignStart>(&r.body)) {
      ++t.campaigns;
      ++perTerm[c->to];
    } else if (const auto* role = std::get_if<rec::RoleChange>(&r.body)) {
      if (role->to != Role::kLeader) continue;
      ++t.winningCampaigns;
      led.insert(role->term);
      if (!t.winner) t.winner = std::pair{r.server, role->term};
    } else if (const auto* v = std::get_if<rec::VoteCast>(&r.body)) {
      t.votes[{r.server, v->term}] = v->candidate;
    }
  }
  for (const auto& [term, count] : perTerm) {
    if (count >= 2 && !led.contains(term)) ++t.splitVotePhases;
  }
  return t;
}

bool first_leader_settled(const sim::World& w) {
  auto id = w.last_leader();
  if (!id) return false;
  const auto& s = w.server(*id);
  return s.role == Role::kLeader && s.leader && s.leader->acceptedCount + 1 >= w.params().quorum();
}

GoldenOutcome finish(std::string name, sim::World& world, const ProtocolParams& params,
                     TimePoint injection, bool livenessApplies) {
  GoldenOutcome g;
  g.name = std::move(name);
  Tally t = tally(world.trace());
  g.campaigns = t.campaigns;
  g.winningCampaigns = t.winningCampaigns;
  g.splitVotePhases = t.splitVotePhases;
  if (t.winner) {
    g.winner = t.winner->first;
    g.winnerTerm = t.winner->second;
  }
  check::CheckContext ctx;
  ctx.params = params;
  ctx.injection = injection;
  if (world.last_leader()) ctx.electedAt = world.last_leader_since();
  ctx.livenessApplies = livenessApplies;
  g.report = check::check_trace(world.trace(), ctx);
  g.trace = world.take_trace();
  return g;
}

}  // namespace

harness::Scenario base_scenario(Variant variant, std::uint32_t n) {
  harness::Scenario s;
  s.params.variant = variant;
  s.params.n = n;
  s.params.baseTime = millis(1500);
  s.params.spacing = millis(500);
  s.params.raftTimeoutLo = millis(1500);
  s.params.raftTimeoutHi = millis(3000);
  s.params.heartbeatInterval = millis(500);
  s.latency = sim::LatencyModel{millis(100), millis(200)};
  s.name = fmt::format("{}_n{}", to_string(variant), n);
  return s;
}

std::vector<SuiteEntry> leader_crash_suite(std::uint32_t trials, std::uint64_t seed) {
  std::vector<SuiteEntry> out;
  for (Variant v : {Variant::kEscape, Variant::kRaft}) {
    for (std::uint32_t n : kScales) {
      auto s = with_trials(base_scenario(v, n), trials, seed);
      s.name = fmt::format("e1_{}_n{}", to_string(v), n);
      out.push_back({s.name, s});
    }
  }
  return out;
}

std::vector<SuiteEntry> randomness_suite(std::uint32_t trials, std::uint64_t seed) {
  std::vector<SuiteEntry> out;
  for (std::uint32_t hi : kRaftRangeHighsMs) {
    auto s = with_trials(base_scenario(Variant::kRaft, 5), trials, seed);
    s.params.raftTimeoutHi = millis(hi);
    s.name = fmt::format("e2_raft_1500_{}", hi);
    out.push_back({s.name, s});
  }
  return out;
}

std::vector<SuiteEntry> competing_phases_suite(std::uint32_t trials, std::uint64_t seed) {
  std::vector<SuiteEntry> out;
  for (Variant v : {Variant::kEscape, Variant::kRaft}) {
    for (std::uint32_t n : kScales) {
      for (std::uint32_t phases = 0; phases <= 3; ++phases) {
        auto s = harness::force_competing_phases(with_trials(base_scenario(v, n), trials, seed),
                                                 phases);
        s.horizon = millis(40000);
        s.name = fmt::format("e3_{}_n{}_p{}", to_string(v), n, phases);
        out.push_back({s.name, s});
      }
    }
  }
  return out;
}

std::vector<SuiteEntry> message_loss_suite(std::uint32_t trials, std::uint64_t seed) {
  std::vector<SuiteEntry> out;
  for (std::uint32_t n : kLossScales) {
    for (double loss : kLossRates) {
      for (Variant v : {Variant::kRaft, Variant::kZRaft, Variant::kEscape}) {
        auto s = with_trials(base_scenario(v, n), trials, seed);
        s.lossRate = loss;
        s.horizon = millis(60000);
        s.name = fmt::format("e4_{}_n{}_loss{:02d}", to_string(v), n,
                             static_cast<int>(loss * 100 + 0.5));
        out.push_back({s.name, s});
      }
    }
  }
  return out;
}

std::vector<SuiteEntry> adversarial_liveness_suite(std::uint32_t trials, std::uint64_t seed) {
  std::vector<SuiteEntry> out;
  for (std::uint32_t n : {5u, 8u, 16u, 32u, 64u, 128u}) {
    auto s = with_trials(base_scenario(Variant::kEscape, n), trials, seed);
    const std::uint32_t f = s.params.max_faults();
    s.candidateCrashes = f - 1;
    // Each crashed candidate costs at most one of the longest timeouts.
    s.horizon = protocol::compute_election_timeout(s.params, 1) * (f + 1);
    s.name = fmt::format("liveness_escape_n{}", n);
    out.push_back({s.name, s});
  }
  return out;
}

std::optional<std::vector<SuiteEntry>> make_suite(std::string_view name, std::uint32_t trials,
                                                  std::uint64_t seed) {
  std::string key = lower(name);
  if (key == "e1") return leader_crash_suite(trials, seed);
  if (key == "e2") return randomness_suite(trials, seed);
  if (key == "e3") return competing_phases_suite(trials, seed);
  if (key == "e4") return message_loss_suite(trials, seed);
  if (key == "liveness") return adversarial_liveness_suite(trials, seed);
  return std::nullopt;
}

GoldenOutcome split_vote_scenario(std::uint64_t seed) {
  ProtocolParams params = base_scenario(Variant::kRaft, 5).params;
  Rng setup(seed);
  const Term t1{1};
  auto states = synced_cluster(params, t1, 3, setup);
  for (auto& s : states) s.votedFor = Vote{t1, ServerId{1}};
  protocol::crash(states[0]);
  // S3 and S4 expire close together; S2 and S5 would expire much later.
  states[2].electionDeadline = TimePoint{} + millis(1500);
  states[3].electionDeadline = TimePoint{} + millis(1520);
  states[1].electionDeadline = TimePoint{} + millis(2900);
  states[4].electionDeadline = TimePoint{} + millis(3000);

  sim::World world(params, sim::LatencyModel{}, seed, std::move(states), TimePoint{});
  world.mark("inject");
  world.run_until(first_leader_settled, TimePoint{} + millis(20000));
  GoldenOutcome g = finish("split_vote", world, params, TimePoint{}, false);

  Tally t = tally(g.trace);
  const Term t2{2};
  const Term t3{3};
  auto vote = [&](std::uint32_t voter, Term term) -> std::uint32_t {
    auto it = t.votes.find({ServerId{voter}, term});
    return it == t.votes.end() ? 0 : it->second.value;
  };
  std::vector<std::string> misses;
  if (vote(2, t2) != 3) misses.push_back(fmt::format("S2 voted {} in t2", vote(2, t2)));
  if (vote(5, t2) != 4) misses.push_back(fmt::format("S5 voted {} in t2", vote(5, t2)));
  if (g.winner != ServerId{3} || g.winnerTerm != t3) {
    misses.push_back(fmt::format("winner S{} at t{}", g.winner.value, g.winnerTerm.value));
  }
  if (g.splitVotePhases < 1) misses.push_back("no split-vote phase");
  if (!g.report.ok()) misses.push_back("invariant violation");
  g.matched = misses.empty();
  g.detail = g.matched ? "S2 votes S3, S5 votes S4 in t2; S3 wins t3"
                       : fmt::format("{}", fmt::join(misses, "; "));
  return g;
}

GoldenOutcome concurrent_campaign_scenario(std::uint64_t seed) {
  ProtocolParams params = base_scenario(Variant::kEscape, 5).params;
  Rng setup(seed);
  const Term t{10};
  const std::uint64_t k = ppf::clock_epoch(t) + 4;
  auto states = synced_cluster(params, t, 3, setup);
  auto assign = [&](std::uint32_t id, std::uint32_t priority, std::uint64_t clock) {
    states[id - 1].config =
        Configuration{priority, protocol::compute_election_timeout(params, priority), clock};
  };
  assign(1, 1, k);
  assign(5, 2, k);
  assign(2, 3, k);
  assign(4, 4, k - 1);
  assign(3, 5, k);
  for (auto& s : states) s.votedFor = Vote{t, ServerId{1}};
  protocol::crash(states[0]);
  for (std::uint32_t id : {2u, 3u, 4u}) states[id - 1].electionDeadline = TimePoint{} + millis(1500);
  states[4].electionDeadline = TimePoint{} + states[4].config.timerPeriod;

  sim::World world(params, sim::LatencyModel{}, seed, std::move(states), TimePoint{});
  world.mark("inject");
  world.run_until(first_leader_settled, TimePoint{} + millis(20000));
  GoldenOutcome g = finish("concurrent_campaign", world, params, TimePoint{}, true);

  std::vector<std::string> misses;
  if (g.winner != ServerId{3} || g.winnerTerm != t + 5) {
    misses.push_back(fmt::format("winner S{} at term {}", g.winner.value, g.winnerTerm.value));
  }
  if (g.campaigns != 3) misses.push_back(fmt::format("{} campaigns", g.campaigns));
  if (g.winningCampaigns != 1) misses.push_back(fmt::format("{} winners", g.winningCampaigns));
  if (!g.report.ok()) misses.push_back("invariant violation");
  g.matched = misses.empty();
  g.detail = g.matched ? "S3 wins at t+5 after 3 concurrent campaigns"
                       : fmt::format("{}", fmt::join(misses, "; "));
  return g;
}

std::vector<GoldenOutcome> golden_suite() {
  std::vector<GoldenOutcome> out;
  out.push_back(split_vote_scenario());
  out.push_back(concurrent_campaign_scenario());
  return out;
}

// With one fixed timeout, followers that heard the same heartbeat expire
// together and split the vote indefinitely under a narrow latency band. A
// wide band lets elections resolve so the comparison covers leader changes.
const sim::LatencyModel kDegeneracyLatency{millis(10), millis(1000)};

DegeneracyCase degeneracy_case(std::uint64_t seed, std::uint32_t n) {
  ProtocolParams escape = base_scenario(Variant::kEscape, n).params;
  escape.degenerate = true;
  ProtocolParams raft = base_scenario(Variant::kRaft, n).params;
  raft.raftTimeoutLo = raft.raftTimeoutHi = protocol::compute_election_timeout(escape, 1);

  auto play = [&](const ProtocolParams& params) {
    // Staggered first deadlines so the first election can resolve.
    Rng setup(seed);
    std::vector<ServerState> states;
    std::uniform_int_distribution<Duration::rep> offset(0, raft.raftTimeoutLo.count());
    for (std::uint32_t id = 1; id <= n; ++id) {
      ServerState s = protocol::make_server(params, ServerId{id}, TimePoint{}, setup);
      s.electionDeadline = TimePoint{} + Duration{offset(setup)};
      states.push_back(std::move(s));
    }
    sim::World world(params, kDegeneracyLatency, seed, std::move(states), TimePoint{});
    world.run_until([](const sim::World& w) { return w.last_leader().has_value(); },
                    TimePoint{} + millis(60000));
    // Crash whoever leads, bring it back, then crash a follower for a while.
    const TimePoint t0 = world.now();
    const ServerId first = *world.last_leader();
    const ServerId other{first.value % n + 1};
    world.schedule_crash(first, t0 + millis(2000));
    world.schedule_recover(first, t0 + millis(9000));
    world.schedule_crash(other, t0 + millis(12000));
    world.schedule_recover(other, t0 + millis(16000));
    world.run_until([](const sim::World&) { return false; }, t0 + millis(24000));
    return world.take_trace();
  };
  return DegeneracyCase{play(escape), play(raft)};
}

}  // namespace escape::suites
