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

#include "escape/checker.h"

#include <algorithm>
#include <map>

#include <fmt/core.h>

#include "escape/protocol.h"

namespace escape::check {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h * 0xff51afd7ed558ccdULL;
}

class Checker {
 public:
  explicit Checker(const CheckContext& ctx) : ctx_(ctx), report_(empty_report()) {
    const auto n = ctx.params.n;
    term_.assign(n + 1, Term{});
    config_.assign(n + 1, Configuration{});
    crashed_.assign(n + 1, false);
    held_.assign(n + 1, false);
    prefix_.assign(n + 1, {});
    lastCampaign_.assign(n + 1, std::nullopt);
    campaignsAfterInjection_.assign(n + 1, 0);
  }

  void run(const Trace& trace) {
    const auto& records = trace.records();
    for (index_ = 0; index_ < records.size(); ++index_) visit(records[index_]);
    finish();
  }

  CheckReport take() { return std::move(report_); }

 private:
  struct CampaignKey {
    ServerId candidate;
    Term term;
    auto operator<=>(const CampaignKey&) const = default;
  };

  InvariantResult& slot(Invariant inv) {
    return report_.results[static_cast<std::size_t>(inv)];
  }
  void pass(Invariant inv) { ++slot(inv).checked; }
  template <typename... Args>
  void fail(Invariant inv, fmt::format_string<Args...> f, Args&&... args) {
    auto& r = slot(inv);
    ++r.checked;
    if (r.violations++ == 0) {
      r.firstViolation =
          fmt::format("record {}: {}", index_, fmt::format(f, std::forward<Args>(args)...));
    }
  }

  bool after_injection(TimePoint t) const { return ctx_.injection && t >= *ctx_.injection; }
  // From injection up to the record where the converged leader takes office.
  bool within_election(TimePoint t) const { return after_injection(t) && !electionDone_; }

  void visit(const TraceRecord& r) {
    const ServerId s = r.server;
    const auto* msg = std::get_if<rec::MessageEvent>(&r.body);
    bool exempt = std::holds_alternative<rec::Recover>(r.body) ||
                  (msg != nullptr && msg->reason == rec::DropReason::kCrashed);
    if (s.value != 0) {
      if (crashed_[s.value] && !exempt) {
        fail(Invariant::kCrashOpacity, "server {} acted while crashed", s.value);
      } else {
        pass(Invariant::kCrashOpacity);
      }
    }
    std::visit(Overloaded{
                   [&](const rec::Init& e) {
                     term_[s.value] = e.term;
                     set_config(s, e.config, r.time);
                   },
                   [&](const rec::RoleChange& e) {
                     if (e.to != Role::kLeader) return;
                     if (ctx_.electedAt && r.time == *ctx_.electedAt) electionDone_ = true;
                     auto [it, inserted] = leaders_.emplace(e.term, s);
                     if (!inserted && it->second != s) {
                       fail(Invariant::kElectionSafety, "servers {} and {} both led term {}",
                            it->second.value, s.value, e.term.value);
                     } else {
                       pass(Invariant::kElectionSafety);
                     }
                   },
                   [&](const rec::TermChange& e) {
                     if (e.from != term_[s.value] || e.to <= e.from) {
                       fail(Invariant::kTermMonotonicity,
                            "server {} moved from term {} to {} (last seen {})", s.value,
                            e.from.value, e.to.value, term_[s.value].value);
                     } else {
                       pass(Invariant::kTermMonotonicity);
                     }
                     term_[s.value] = e.to;
                   },
                   [&](const rec::VoteCast& e) {
                     auto [it, inserted] = votes_.emplace(std::pair{s, e.term}, e.candidate);
                     if (!inserted && it->second != e.candidate) {
                       fail(Invariant::kSingleVote, "server {} voted for {} and {} in term {}",
                            s.value, it->second.value, e.candidate.value, e.term.value);
                     } else {
                       pass(Invariant::kSingleVote);
                     }
                   },
                   [&](const rec::ConfigChange& e) { set_config(s, e.to, r.time); },
                   [&](const rec::CampaignStart& e) { on_campaign(r, e); },
                   [&](const rec::Append& e) { on_append(s, e); },
                   [&](const rec::Truncate& e) {
                     auto& p = prefix_[s.value];
                     if (e.fromIndex >= 1 && e.fromIndex <= p.size()) p.resize(e.fromIndex - 1);
                   },
                   [&](const rec::Commit& e) { on_commit(s, e); },
                   [&](const rec::MessageEvent& e) { on_message(r, e); },
                   [&](const rec::Crash&) { set_crashed(s, true); },
                   [&](const rec::Recover&) { set_crashed(s, false); },
                   [&](const rec::Warning&) {},
                   [&](const rec::Marker&) {},
               },
               r.body);
  }

  void set_config(ServerId s, const Configuration& c, TimePoint) {
    if (ctx_.params.uses_priorities()) {
      bool exact = c.priority >= 1 && c.priority <= ctx_.params.n &&
                   c.timerPeriod == protocol::compute_election_timeout(ctx_.params, c.priority);
      if (exact) {
        pass(Invariant::kTimeoutFormula);
      } else {
        fail(Invariant::kTimeoutFormula, "server {} holds priority {} with period {} us", s.value,
             c.priority, c.timerPeriod.count());
      }
    }
    if (ctx_.params.ppf_enabled()) {
      if (held_[s.value]) release({config_[s.value].priority, config_[s.value].confClock});
      hold(s, {c.priority, c.confClock});
    }
    config_[s.value] = c;
  }

  // No two servers, crashed or not, may hold the same (priority, clock) pair.
  // This covers both staleness lemmas and, restricted to live servers at the
  // newest clock, configuration uniqueness.
  void hold(ServerId s, std::pair<std::uint32_t, std::uint64_t> key) {
    held_[s.value] = true;
    auto& owners = pairs_[key];
    owners.push_back(s);
    if (owners.size() > 1) {
      fail(Invariant::kConfigUniqueness, "servers {} and {} both hold priority {} at clock {}",
           owners.front().value, s.value, key.first, key.second);
    } else {
      pass(Invariant::kConfigUniqueness);
    }
  }
  void release(std::pair<std::uint32_t, std::uint64_t> key) {
    auto it = pairs_.find(key);
    if (it == pairs_.end()) return;
    it->second.pop_back();
    if (it->second.empty()) pairs_.erase(it);
  }

  void set_crashed(ServerId s, bool crashed) { crashed_[s.value] = crashed; }

  void on_campaign(const TraceRecord& r, const rec::CampaignStart& e) {
    const ServerId s = r.server;
    std::uint32_t expected = ctx_.params.uses_priorities() ? config_[s.value].priority : 1;
    if (e.priority != expected || e.to.value - e.from.value != expected) {
      fail(Invariant::kTermJump, "server {} jumped {} -> {} holding priority {}", s.value,
           e.from.value, e.to.value, expected);
    } else {
      pass(Invariant::kTermJump);
    }
    lastCampaign_[s.value] = CampaignKey{s, e.to};
    campaignMessages_[CampaignKey{s, e.to}] = 0;
    if (within_election(r.time)) {
      ++campaignsToWinner_;
      ++campaignsAfterInjection_[s.value];
    }
  }

  void on_append(ServerId s, const rec::Append& e) {
    auto& p = prefix_[s.value];
    if (e.index != p.size() + 1) {
      fail(Invariant::kLogMatching, "server {} appended index {} onto a log of length {}",
           s.value, e.index, p.size());
      return;
    }
    std::uint64_t h = mix(p.empty() ? 0 : p.back(), mix(e.term.value, e.digest));
    p.push_back(h);
    auto [it, inserted] = entryPrefix_.emplace(std::pair{e.index, e.term.value}, h);
    if (!inserted && it->second != h) {
      fail(Invariant::kLogMatching, "server {} disagrees below index {} term {}", s.value, e.index,
           e.term.value);
    } else {
      pass(Invariant::kLogMatching);
    }
  }

  void on_commit(ServerId s, const rec::Commit& e) {
    if (e.to <= e.from || e.to == 0) return;
    const auto& p = prefix_[s.value];
    if (e.to > p.size()) {
      fail(Invariant::kLogMatching, "server {} committed {} beyond its log of {}", s.value, e.to,
           p.size());
      return;
    }
    auto [it, inserted] = committed_.emplace(e.to, p[e.to - 1]);
    if (!inserted && it->second != p[e.to - 1]) {
      fail(Invariant::kLogMatching, "server {} committed a different prefix at index {}", s.value,
           e.to);
    } else {
      pass(Invariant::kLogMatching);
    }
  }

  void on_message(const TraceRecord& r, const rec::MessageEvent& e) {
    bool fresh = e.dir == rec::Direction::kSend ||
                 (e.dir == rec::Direction::kDrop && e.reason == rec::DropReason::kLoss);
    if (!fresh) return;
    if (within_election(r.time)) ++messagesToWinner_;
    std::optional<CampaignKey> key;
    if (e.msg.kind == MessageKind::kRequestVote) {
      key = CampaignKey{r.server, e.msg.term};
    } else if (e.msg.kind == MessageKind::kRequestVoteReply) {
      key = lastCampaign_[e.peer.value];
    }
    if (!key) return;
    auto it = campaignMessages_.find(*key);
    if (it == campaignMessages_.end()) return;
    ++it->second;
  }

  void finish() {
    const auto n = ctx_.params.n;
    for (const auto& [key, count] : campaignMessages_) {
      if (count > 2ULL * n) {
        fail(Invariant::kCampaignMessages, "campaign of server {} in term {} used {} messages",
             key.candidate.value, key.term.value, count);
      } else {
        pass(Invariant::kCampaignMessages);
      }
    }

    if (ctx_.oneCampaignApplies) {
      std::uint32_t most = 0;
      for (std::uint32_t c : campaignsAfterInjection_) most = std::max(most, c);
      if (!ctx_.electedAt || most != 1) {
        fail(Invariant::kOneCampaign, "a server campaigned {} times before a winner emerged",
             most);
      } else {
        pass(Invariant::kOneCampaign);
      }
      if (ctx_.electedAt && campaignsToWinner_ == 1) {
        if (messagesToWinner_ > 2ULL * (n - 1)) {
          fail(Invariant::kBestCaseMessages, "single-campaign election used {} messages",
               messagesToWinner_);
        } else {
          pass(Invariant::kBestCaseMessages);
        }
      }
    }

    if (ctx_.livenessApplies) {
      std::uint64_t bound = ctx_.params.max_faults() + 1ULL;
      if (!ctx_.electedAt) {
        fail(Invariant::kLivenessBound, "no leader after {} campaigns", campaignsToWinner_);
      } else if (campaignsToWinner_ > bound) {
        fail(Invariant::kLivenessBound, "{} campaigns to elect a leader, bound {}",
             campaignsToWinner_, bound);
      } else {
        pass(Invariant::kLivenessBound);
      }
    }
  }

  const CheckContext& ctx_;
  CheckReport report_;
  std::size_t index_ = 0;

  std::vector<Term> term_;
  std::vector<Configuration> config_;
  std::vector<bool> crashed_;
  std::vector<bool> held_;
  std::map<std::pair<std::uint32_t, std::uint64_t>, std::vector<ServerId>> pairs_;
  std::map<Term, ServerId> leaders_;
  std::map<std::pair<ServerId, Term>, ServerId> votes_;
  std::vector<std::vector<std::uint64_t>> prefix_;
  std::map<std::pair<std::uint64_t, std::uint64_t>, std::uint64_t> entryPrefix_;
  std::map<std::uint64_t, std::uint64_t> committed_;
  std::vector<std::optional<CampaignKey>> lastCampaign_;
  std::map<CampaignKey, std::uint64_t> campaignMessages_;
  std::vector<std::uint32_t> campaignsAfterInjection_;
  std::uint64_t campaignsToWinner_ = 0;
  std::uint64_t messagesToWinner_ = 0;
  bool electionDone_ = false;
};

}  // namespace

std::string_view to_string(Invariant inv) {
  switch (inv) {
    case Invariant::kElectionSafety: return "election_safety";
    case Invariant::kTermMonotonicity: return "term_monotonicity";
    case Invariant::kSingleVote: return "single_vote";
    case Invariant::kTermJump: return "term_jump";
    case Invariant::kTimeoutFormula: return "timeout_formula";
    case Invariant::kLogMatching: return "log_matching";
    case Invariant::kConfigUniqueness: return "config_uniqueness";
    case Invariant::kCrashOpacity: return "crash_opacity";
    case Invariant::kOneCampaign: return "one_campaign";
    case Invariant::kLivenessBound: return "liveness_f_plus_1";
    case Invariant::kCampaignMessages: return "campaign_messages";
    case Invariant::kBestCaseMessages: return "best_case_messages";
  }
  return "unknown";
}

bool CheckReport::ok() const {
  return std::all_of(results.begin(), results.end(),
                     [](const InvariantResult& r) { return r.violations == 0; });
}

void CheckReport::merge(const CheckReport& other) {
  for (std::size_t i = 0; i < results.size() && i < other.results.size(); ++i) {
    auto& mine = results[i];
    const auto& theirs = other.results[i];
    mine.checked += theirs.checked;
    if (mine.violations == 0 && theirs.violations > 0) mine.firstViolation = theirs.firstViolation;
    mine.violations += theirs.violations;
  }
}

CheckReport empty_report() {
  CheckReport r;
  r.results.resize(kInvariantCount);
  for (std::size_t i = 0; i < kInvariantCount; ++i) {
    r.results[i].invariant = static_cast<Invariant>(i);
  }
  return r;
}

CheckReport check_trace(const Trace& trace, const CheckContext& ctx) {
  Checker c(ctx);
  c.run(trace);
  return c.take();
}

}  // namespace escape::check
