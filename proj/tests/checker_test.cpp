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

#include "escape/checker.h"
#include "escape/harness.h"
#include "escape/protocol.h"
#include "escape/suites.h"
#include "test_util.h"

namespace escape::check {
namespace {

using testing::at_ms;
using testing::params_for;

class TraceBuilder {
 public:
  explicit TraceBuilder(const ProtocolParams& p) : params_(p) {
    for (std::uint32_t id = 1; id <= p.n; ++id) {
      add(0, id, rec::Init{Term{}, protocol::initial_configuration(p, ServerId{id})});
    }
  }
  TraceBuilder& add(std::int64_t ms, std::uint32_t server, TraceBody body) {
    trace_.append(at_ms(ms), ServerId{server}, std::move(body));
    return *this;
  }
  TraceBuilder& campaign(std::int64_t ms, std::uint32_t server, std::uint64_t from,
                         std::uint64_t to, std::uint32_t priority) {
    add(ms, server, rec::CampaignStart{Term{from}, Term{to}, priority, 0});
    add(ms, server, rec::TermChange{Term{from}, Term{to}});
    return add(ms, server, rec::VoteCast{Term{to}, ServerId{server}});
  }
  TraceBuilder& leader(std::int64_t ms, std::uint32_t server, std::uint64_t term) {
    return add(ms, server, rec::RoleChange{Role::kCandidate, Role::kLeader, Term{term}});
  }
  TraceBuilder& send(std::int64_t ms, std::uint32_t from, std::uint32_t to, MessageKind kind,
                     std::uint64_t term) {
    rec::MessageSummary m;
    m.kind = kind;
    m.term = Term{term};
    return add(ms, from, rec::MessageEvent{rec::Direction::kSend, rec::DropReason::kNone, ServerId{to}, m});
  }
  CheckReport check(CheckContext ctx = {}) const {
    ctx.params = params_;
    return check_trace(trace_, ctx);
  }

 private:
  ProtocolParams params_;
  Trace trace_;
};

void expect_only(const CheckReport& r, Invariant bad) {
  for (const auto& res : r.results) {
    if (res.invariant == bad) {
      EXPECT_GT(res.violations, 0u) << to_string(bad) << " not flagged";
      EXPECT_FALSE(res.firstViolation.empty());
    } else {
      EXPECT_EQ(res.violations, 0u) << to_string(res.invariant) << ": " << res.firstViolation;
    }
  }
}

TEST(Checker, CleanTracePasses) {
  auto p = params_for(Variant::kRaft, 3);
  TraceBuilder b(p);
  b.campaign(1500, 2, 0, 1, 1).leader(1700, 2, 1);
  auto r = b.check();
  EXPECT_TRUE(r.ok());
  EXPECT_GT(r.get(Invariant::kElectionSafety).checked, 0u);
}

TEST(Checker, TwoLeadersInOneTerm) {
  auto p = params_for(Variant::kRaft, 3);
  TraceBuilder b(p);
  b.campaign(1500, 2, 0, 1, 1).campaign(1500, 3, 0, 1, 1).leader(1700, 2, 1).leader(1710, 3, 1);
  expect_only(b.check(), Invariant::kElectionSafety);
}

TEST(Checker, TermGoingBackwards) {
  auto p = params_for(Variant::kRaft, 3);
  TraceBuilder b(p);
  b.add(10, 1, rec::TermChange{Term{0}, Term{4}}).add(20, 1, rec::TermChange{Term{4}, Term{3}});
  expect_only(b.check(), Invariant::kTermMonotonicity);
}

TEST(Checker, DoubleVote) {
  auto p = params_for(Variant::kRaft, 3);
  TraceBuilder b(p);
  b.add(10, 1, rec::VoteCast{Term{2}, ServerId{2}}).add(20, 1, rec::VoteCast{Term{2}, ServerId{3}});
  expect_only(b.check(), Invariant::kSingleVote);
}

TEST(Checker, TermJumpMustEqualPriority) {
  auto p = params_for(Variant::kEscape, 5);
  TraceBuilder good(p);
  good.campaign(1500, 4, 0, 4, 4);
  EXPECT_TRUE(good.check().ok());

  TraceBuilder bad(p);
  bad.campaign(1500, 4, 0, 5, 4);
  expect_only(bad.check(), Invariant::kTermJump);
}

TEST(Checker, RaftJumpsByOne) {
  auto p = params_for(Variant::kRaft, 5);
  TraceBuilder bad(p);
  bad.campaign(1500, 4, 0, 2, 1);
  expect_only(bad.check(), Invariant::kTermJump);
}

TEST(Checker, PeriodMustFollowFormula) {
  auto p = params_for(Variant::kEscape, 5);
  TraceBuilder b(p);
  b.add(100, 2, rec::ConfigChange{protocol::initial_configuration(p, ServerId{2}),
                                  Configuration{3, millis(2400), 7}});
  expect_only(b.check(), Invariant::kTimeoutFormula);
}

TEST(Checker, DuplicatedConfiguration) {
  auto p = params_for(Variant::kEscape, 5);
  TraceBuilder b(p);
  Configuration c{3, protocol::compute_election_timeout(p, 3), 9};
  b.add(100, 2, rec::ConfigChange{protocol::initial_configuration(p, ServerId{2}), c});
  b.add(100, 4, rec::ConfigChange{protocol::initial_configuration(p, ServerId{4}), c});
  expect_only(b.check(), Invariant::kConfigUniqueness);
}

TEST(Checker, SamePriorityAtDifferentClocksIsFine) {
  auto p = params_for(Variant::kEscape, 5);
  TraceBuilder b(p);
  b.add(100, 2, rec::ConfigChange{protocol::initial_configuration(p, ServerId{2}),
                                  Configuration{3, protocol::compute_election_timeout(p, 3), 9}});
  EXPECT_TRUE(b.check().ok());
}

TEST(Checker, DivergentLogs) {
  auto p = params_for(Variant::kRaft, 3);
  TraceBuilder b(p);
  b.add(10, 1, rec::Append{1, Term{1}, 0xaa}).add(10, 2, rec::Append{1, Term{1}, 0xbb});
  expect_only(b.check(), Invariant::kLogMatching);
}

TEST(Checker, ConflictingCommits) {
  auto p = params_for(Variant::kRaft, 3);
  TraceBuilder b(p);
  b.add(10, 1, rec::Append{1, Term{1}, 0xaa}).add(10, 1, rec::Commit{0, 1});
  b.add(10, 2, rec::Append{1, Term{2}, 0xcc}).add(10, 2, rec::Commit{0, 1});
  expect_only(b.check(), Invariant::kLogMatching);
}

TEST(Checker, CrashedServerActing) {
  auto p = params_for(Variant::kRaft, 3);
  TraceBuilder b(p);
  b.add(10, 2, rec::Crash{}).add(20, 2, rec::TermChange{Term{0}, Term{1}});
  expect_only(b.check(), Invariant::kCrashOpacity);

  TraceBuilder ok(p);
  ok.add(10, 2, rec::Crash{}).add(20, 2, rec::Recover{}).add(30, 2, rec::TermChange{Term{0}, Term{1}});
  EXPECT_TRUE(ok.check().ok());
}

TEST(Checker, CampaignMessageBound) {
  auto p = params_for(Variant::kRaft, 3);
  TraceBuilder b(p);
  b.campaign(1500, 2, 0, 1, 1);
  for (int i = 0; i < 7; ++i) b.send(1500, 2, 1 + i % 2 * 2, MessageKind::kRequestVote, 1);
  expect_only(b.check(), Invariant::kCampaignMessages);
}

TEST(Checker, SecondCampaignBreaksLemma) {
  auto p = params_for(Variant::kEscape, 5);
  TraceBuilder b(p);
  b.add(1000, 0, rec::Marker{"inject"});
  b.campaign(2500, 5, 0, 5, 5).campaign(6000, 5, 5, 10, 5).leader(6300, 5, 10);
  CheckContext ctx;
  ctx.injection = at_ms(1000);
  ctx.electedAt = at_ms(6300);
  ctx.oneCampaignApplies = true;
  expect_only(b.check(ctx), Invariant::kOneCampaign);
}

TEST(Checker, BestCaseMessageCount) {
  auto p = params_for(Variant::kEscape, 3);
  TraceBuilder b(p);
  b.campaign(2500, 3, 0, 3, 3);
  for (std::uint32_t to : {1u, 2u, 1u}) b.send(2500, 3, to, MessageKind::kRequestVote, 3);
  for (std::uint32_t from : {1u, 2u}) b.send(2600, from, 3, MessageKind::kRequestVoteReply, 3);
  b.leader(2650, 3, 3);
  CheckContext ctx;
  ctx.injection = at_ms(1000);
  ctx.electedAt = at_ms(2650);
  ctx.oneCampaignApplies = true;
  expect_only(b.check(ctx), Invariant::kBestCaseMessages);
}

TEST(Checker, LivenessBound) {
  auto p = params_for(Variant::kEscape, 5);  // f = 2, bound 3 campaigns
  TraceBuilder b(p);
  b.campaign(2000, 5, 0, 5, 5).campaign(3000, 4, 0, 4, 4).campaign(4000, 3, 0, 3, 3);
  b.campaign(5000, 2, 0, 2, 2).leader(5300, 2, 2);
  CheckContext ctx;
  ctx.injection = at_ms(1000);
  ctx.electedAt = at_ms(5300);
  ctx.livenessApplies = true;
  expect_only(b.check(ctx), Invariant::kLivenessBound);

  CheckContext none;
  none.injection = at_ms(1000);
  none.livenessApplies = true;
  TraceBuilder quiet(p);
  expect_only(quiet.check(none), Invariant::kLivenessBound);
}

TEST(Checker, MergeKeepsFirstViolation) {
  auto a = empty_report();
  auto b = empty_report();
  b.results[0].violations = 2;
  b.results[0].checked = 5;
  b.results[0].firstViolation = "first";
  auto c = b;
  c.results[0].firstViolation = "second";
  a.merge(b);
  a.merge(c);
  EXPECT_EQ(a.results[0].violations, 4u);
  EXPECT_EQ(a.results[0].checked, 10u);
  EXPECT_EQ(a.results[0].firstViolation, "first");
  EXPECT_FALSE(a.ok());
}

TEST(Checker, TamperedRealTraceIsCaught) {
  auto scenario = suites::base_scenario(Variant::kEscape, 5);
  auto out = harness::run_trial(scenario, 0);
  ASSERT_TRUE(out.report.ok());
  Trace tampered;
  bool injected = false;
  for (const auto& r : out.trace.records()) {
    tampered.append(r.time, r.server, r.body);
    const auto* role = std::get_if<rec::RoleChange>(&r.body);
    if (!injected && role && role->to == Role::kLeader) {
      ServerId other{r.server.value == 1 ? 2u : 1u};
      tampered.append(r.time, other, rec::RoleChange{Role::kCandidate, Role::kLeader, role->term});
      injected = true;
    }
  }
  ASSERT_TRUE(injected);
  CheckContext ctx;
  ctx.params = scenario.params;
  EXPECT_GT(check_trace(tampered, ctx).get(Invariant::kElectionSafety).violations, 0u);
}

}  // namespace
}  // namespace escape::check
