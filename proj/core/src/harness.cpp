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

#include "escape/harness.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <thread>

#include <fmt/core.h>

namespace escape::harness {

namespace {

// Generous bound for the warm-up election; the first leader normally
// appears within two timeout periods.
constexpr Duration kStabilizationLimit = millis(600'000);

Term max_live_term(const sim::World& w) {
  Term best;
  for (const auto& s : w.servers()) {
    if (!s.crashed) best = std::max(best, s.currentTerm);
  }
  return best;
}

bool leader_settled(const sim::World& w, std::uint32_t rounds) {
  auto id = w.last_leader();
  if (!id) return false;
  const ServerState& s = w.server(*id);
  return !s.crashed && s.role == Role::kLeader && s.leader && s.leader->rounds >= rounds &&
         s.currentTerm == max_live_term(w);
}

// A replacement leader has taken office after `injection`, a quorum has
// accepted it, and nothing in flight can still unseat it.
bool replacement_settled(const sim::World& w, TimePoint injection) {
  auto id = w.last_leader();
  if (!id || w.last_leader_since() < injection) return false;
  const ServerState& s = w.server(*id);
  if (s.crashed || s.role != Role::kLeader || !s.leader) return false;
  if (s.leader->acceptedCount + 1 < w.params().quorum()) return false;
  if (s.currentTerm != max_live_term(w)) return false;
  auto inFlight = w.max_in_flight_term();
  return !inFlight || *inFlight <= s.currentTerm;
}

struct Timeline {
  std::optional<TimePoint> firstCampaign;
  std::uint32_t campaigns = 0;
  std::uint32_t splitVotePhases = 0;
  std::uint64_t messages = 0;
};

Timeline scan(const Trace& trace, std::size_t from, TimePoint until) {
  Timeline t;
  std::map<Term, std::uint32_t> campaignsPerTerm;
  std::map<Term, bool> led;
  const auto& records = trace.records();
  for (std::size_t i = from; i < records.size(); ++i) {
    const TraceRecord& r = records[i];
    if (r.time > until) break;
    if (const auto* role = std::get_if<rec::RoleChange>(&r.body);
        role != nullptr && role->to == Role::kLeader && r.time == until) {
      led[role->term] = true;
      break;
    }
    if (const auto* c = std::get_if<rec::CampaignStart>(&r.body)) {
      if (!t.firstCampaign) t.firstCampaign = r.time;
      ++t.campaigns;
      ++campaignsPerTerm[c->to];
    } else if (const auto* role = std::get_if<rec::RoleChange>(&r.body)) {
      if (role->to == Role::kLeader) led[role->term] = true;
    } else if (const auto* m = std::get_if<rec::MessageEvent>(&r.body)) {
      if (m->dir == rec::Direction::kSend ||
          (m->dir == rec::Direction::kDrop && m->reason == rec::DropReason::kLoss)) {
        ++t.messages;
      }
    }
  }
  for (const auto& [term, count] : campaignsPerTerm) {
    if (count >= 2 && !led.contains(term)) ++t.splitVotePhases;
  }
  return t;
}

double percentile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
  return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

}  // namespace

void Scenario::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidScenario, what); };
  if (trials == 0) fail("trials must be at least 1");
  if (latency.min < Duration::zero() || latency.min > latency.max) {
    fail(fmt::format("latency range [{}, {}] ms is invalid", to_ms(latency.min),
                     to_ms(latency.max)));
  }
  params.validate(latency.max);
  if (!(lossRate >= 0.0 && lossRate < 1.0)) fail(fmt::format("loss rate {} outside [0, 1)", lossRate));
  if (horizon <= Duration::zero()) fail("horizon must be positive");
  if (stabilizationRounds == 0) fail("stabilization needs at least one heartbeat round");
  if (forcedPhases > 3) fail(fmt::format("forced phases {} exceeds 3", forcedPhases));
  if (forcedPhases > 0 && forcedPhases + 1 > params.n - 1) {
    fail(fmt::format("{} forced phases need {} followers but n = {}", forcedPhases,
                     forcedPhases + 1, params.n));
  }
  for (const auto& c : crashes) {
    if (c.server > params.n) fail(fmt::format("crash names server {} but n = {}", c.server, params.n));
    if (c.at < Duration::zero()) fail("crash times must be non-negative");
  }
  for (const auto& r : recoveries) {
    bool follows = std::any_of(crashes.begin(), crashes.end(), [&](const TimedFault& c) {
      return c.server == r.server && c.at < r.at;
    });
    if (!follows) {
      fail(fmt::format("recovery of server {} at {} ms follows no crash", r.server, to_ms(r.at)));
    }
  }
}

TrialOutput run_trial(const Scenario& scenario, std::uint32_t trialIndex) {
  scenario.validate();
  const ProtocolParams& params = scenario.params;
  const std::uint64_t seed = scenario.trial_seed(trialIndex);
  sim::World world(params, scenario.latency, seed);

  auto settled = world.run_until(
      [&](const sim::World& w) { return leader_settled(w, scenario.stabilizationRounds); },
      TimePoint{} + kStabilizationLimit);
  if (settled != sim::StopReason::kStopped) {
    throw Error(ErrorCode::kInvalidScenario,
                fmt::format("no stable leader during warm-up (seed {})", seed));
  }
  // Inject once the latest heartbeat round has reached every follower.
  const TimePoint injection = world.now() + scenario.latency.max;
  world.run_until([](const sim::World&) { return false; }, injection);
  const ServerId leader = *world.last_leader();

  world.mark("inject");
  const std::size_t injectionIndex = world.trace().size() - 1;

  sim::FaultSchedule faults;
  faults.lossRate = scenario.lossRate;
  faults.lossOnReplies = scenario.lossOnReplies;
  faults.candidateCrashes = scenario.candidateCrashes;
  auto resolve = [&](std::uint32_t id) { return id == 0 ? leader : ServerId{id}; };
  for (const auto& c : scenario.crashes) faults.crashes.emplace_back(resolve(c.server), injection + c.at);
  for (const auto& r : scenario.recoveries) {
    faults.recoveries.emplace_back(resolve(r.server), injection + r.at);
  }
  if (scenario.forcedPhases > 0) {
    std::vector<const ServerState*> followers;
    for (const auto& s : world.servers()) {
      if (s.id != leader && !s.crashed) followers.push_back(&s);
    }
    std::sort(followers.begin(), followers.end(), [](const ServerState* a, const ServerState* b) {
      if (a->electionDeadline != b->electionDeadline) return a->electionDeadline < b->electionDeadline;
      return a->id < b->id;
    });
    const TimePoint d0 = followers.front()->electionDeadline;
    const bool raft = params.variant == Variant::kRaft;
    for (std::uint32_t i = 0; i <= scenario.forcedPhases; ++i) {
      faults.pinnedTimeouts.push_back(sim::PinnedTimeout{
          followers[i]->id, d0, raft ? scenario.forcedPhases : 0u, params.raftTimeoutLo});
    }
  }
  world.apply(faults);

  auto reason = world.run_until(
      [&](const sim::World& w) { return replacement_settled(w, injection); },
      injection + scenario.horizon);

  TrialOutput out;
  TrialResult& r = out.result;
  r.trial = trialIndex;
  r.variant = params.variant;
  r.n = params.n;
  r.seed = seed;
  r.converged = reason == sim::StopReason::kStopped;

  const TimePoint end = r.converged ? world.last_leader_since() : injection + scenario.horizon;
  Timeline t = scan(world.trace(), injectionIndex, end);
  r.campaigns = t.campaigns;
  r.splitVotePhases = t.splitVotePhases;
  r.messages = t.messages;
  r.total = end - injection;
  r.detection = t.firstCampaign ? *t.firstCampaign - injection : r.total;
  r.election = r.total - r.detection;
  if (r.converged) r.winner = *world.last_leader();

  const bool prioritized = params.ppf_enabled();
  const bool lossless = scenario.lossRate == 0.0;
  const bool onlyLeaderCrash = scenario.crashes == std::vector<TimedFault>{TimedFault{}} &&
                               scenario.recoveries.empty() && scenario.candidateCrashes == 0;
  check::CheckContext ctx;
  ctx.params = params;
  ctx.injection = injection;
  if (r.converged) ctx.electedAt = world.last_leader_since();
  ctx.oneCampaignApplies = prioritized && lossless && onlyLeaderCrash;
  ctx.livenessApplies = prioritized && lossless && scenario.recoveries.empty();
  out.report = check::check_trace(world.trace(), ctx);
  out.trace = world.take_trace();
  return out;
}

SummaryStats summarize(const std::vector<TrialResult>& results) {
  SummaryStats s;
  s.trials = static_cast<std::uint32_t>(results.size());
  std::vector<double> totals;
  double detection = 0.0;
  double election = 0.0;
  double campaigns = 0.0;
  std::uint32_t split = 0;
  for (const auto& r : results) {
    if (r.splitVotePhases > 0) ++split;
    campaigns += r.campaigns;
    if (!r.converged) continue;
    totals.push_back(to_ms(r.total));
    detection += to_ms(r.detection);
    election += to_ms(r.election);
  }
  s.converged = static_cast<std::uint32_t>(totals.size());
  if (s.trials > 0) {
    s.splitVoteRate = static_cast<double>(split) / s.trials;
    s.nonConvergenceRate = static_cast<double>(s.trials - s.converged) / s.trials;
    s.meanCampaigns = campaigns / s.trials;
  }
  std::sort(totals.begin(), totals.end());
  if (!totals.empty()) {
    double sum = 0.0;
    for (double v : totals) sum += v;
    s.mean = sum / static_cast<double>(totals.size());
    s.meanDetection = detection / static_cast<double>(totals.size());
    s.meanElection = election / static_cast<double>(totals.size());
    s.p50 = percentile(totals, 0.50);
    s.p90 = percentile(totals, 0.90);
    s.p99 = percentile(totals, 0.99);
  }
  const double last = totals.empty() ? 0.0 : totals.back();
  const auto steps = static_cast<std::size_t>(std::ceil(last / kCdfResolutionMs));
  std::size_t k = 0;
  for (std::size_t i = 0; i <= steps; ++i) {
    double ms = static_cast<double>(i) * kCdfResolutionMs;
    while (k < totals.size() && totals[k] <= ms) ++k;
    s.cdf.push_back(CdfPoint{ms, s.trials == 0 ? 0.0 : static_cast<double>(k) / s.trials});
  }
  return s;
}

double non_convergence_within(const std::vector<TrialResult>& results, double withinMs) {
  if (results.empty()) return 0.0;
  auto late = std::count_if(results.begin(), results.end(), [&](const TrialResult& r) {
    return !r.converged || to_ms(r.total) > withinMs;
  });
  return static_cast<double>(late) / static_cast<double>(results.size());
}

ExperimentResult run_experiment(const Scenario& scenario, const RunOptions& options) {
  scenario.validate();
  ExperimentResult ex;
  ex.scenario = scenario;
  ex.results.resize(scenario.trials);
  std::vector<check::CheckReport> reports(scenario.trials);

  std::mutex emitMutex;
  std::map<std::uint32_t, TrialOutput> parked;
  std::uint32_t nextEmit = 0;
  std::atomic<std::uint32_t> nextTrial{0};
  std::exception_ptr failure;
  std::mutex failureMutex;

  auto worker = [&] {
    try {
      for (std::uint32_t i = nextTrial++; i < scenario.trials; i = nextTrial++) {
        TrialOutput out = run_trial(scenario, i);
        ex.results[i] = out.result;
        reports[i] = std::move(out.report);
        if (!options.onTrial) continue;
        std::lock_guard lock(emitMutex);
        parked.emplace(i, std::move(out));
        while (!parked.empty() && parked.begin()->first == nextEmit) {
          options.onTrial(parked.begin()->second);
          parked.erase(parked.begin());
          ++nextEmit;
        }
      }
    } catch (...) {
      std::lock_guard lock(failureMutex);
      if (!failure) failure = std::current_exception();
      nextTrial = scenario.trials;
    }
  };

  const std::uint32_t workers = std::clamp<std::uint32_t>(options.workers, 1, scenario.trials);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::uint32_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  ex.report = check::empty_report();
  for (std::uint32_t i = 0; i < scenario.trials; ++i) {
    if (!reports[i].ok() && !ex.firstViolationSeed) ex.firstViolationSeed = ex.results[i].seed;
    ex.report.merge(reports[i]);
  }
  ex.stats = summarize(ex.results);
  return ex;
}

Scenario force_competing_phases(Scenario scenario, std::uint32_t phases) {
  scenario.forcedPhases = phases;
  if (phases > 3) {
    throw Error(ErrorCode::kInvalidScenario, fmt::format("forced phases {} exceeds 3", phases));
  }
  if (phases > 0 && phases + 1 > scenario.params.n - 1) {
    throw Error(ErrorCode::kInvalidScenario,
                fmt::format("{} forced phases need {} followers but n = {}", phases, phases + 1,
                            scenario.params.n));
  }
  return scenario;
}

}  // namespace escape::harness
