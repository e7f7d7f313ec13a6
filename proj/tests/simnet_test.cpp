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

#include <map>

#include "escape/checker.h"
#include "escape/simnet.h"
#include "test_util.h"

namespace escape::sim {
namespace {

using testing::at_ms;
using testing::params_for;

std::vector<ServerId> recipients(std::uint32_t count) {
  std::vector<ServerId> out;
  for (std::uint32_t id = 2; id <= count + 1; ++id) out.emplace_back(id);
  return out;
}

TEST(Loss, CountRoundsFractionOfRecipients) {
  EXPECT_EQ(loss_count(9, 0.0), 0u);
  EXPECT_EQ(loss_count(9, 0.2), 2u);
  EXPECT_EQ(loss_count(9, 0.4), 4u);
  EXPECT_EQ(loss_count(49, 0.1), 5u);
  EXPECT_EQ(loss_count(99, 0.3), 30u);
}

TEST(Loss, EveryBroadcastDropsExactly) {
  LatencyModel latency;
  Rng rng(5);
  auto to = recipients(9);
  std::map<std::uint32_t, int> dropCounts;
  const int broadcasts = 20000;
  for (int i = 0; i < broadcasts; ++i) {
    auto plan = deliver_broadcast(to, 0.2, latency, rng);
    ASSERT_EQ(plan.dropped.size(), 2u);
    ASSERT_EQ(plan.deliveries.size(), 7u);
    for (auto id : plan.dropped) ++dropCounts[id.value];
    for (auto& [id, delay] : plan.deliveries) {
      EXPECT_TRUE(std::find(plan.dropped.begin(), plan.dropped.end(), id) == plan.dropped.end());
    }
  }
  // Uniform choice: each recipient is dropped 2/9 of the time.
  for (auto& [id, count] : dropCounts) {
    EXPECT_NEAR(count / double(broadcasts), 2.0 / 9.0, 0.02) << "server " << id;
  }
  EXPECT_EQ(dropCounts.size(), 9u);
}

TEST(Loss, LosslessDeliversToAll) {
  LatencyModel latency;
  Rng rng(5);
  auto to = recipients(4);
  auto plan = deliver_broadcast(to, 0.0, latency, rng);
  EXPECT_TRUE(plan.dropped.empty());
  ASSERT_EQ(plan.deliveries.size(), 4u);
  for (std::size_t i = 0; i < to.size(); ++i) EXPECT_EQ(plan.deliveries[i].first, to[i]);
}

TEST(Latency, SamplesStayInBounds) {
  LatencyModel latency{millis(100), millis(200)};
  Rng rng(9);
  Duration lo = Duration::max(), hi = Duration::min();
  for (int i = 0; i < 50000; ++i) {
    auto d = latency.sample(rng);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  EXPECT_GE(lo, millis(100));
  EXPECT_LE(hi, millis(200));
  EXPECT_LT(lo, millis(101));
  EXPECT_GT(hi, millis(199));
  LatencyModel fixed{millis(150), millis(150)};
  EXPECT_EQ(fixed.sample(rng), millis(150));
}

TEST(World, SameSeedSameTrace) {
  for (auto variant : {Variant::kRaft, Variant::kZRaft, Variant::kEscape}) {
    auto p = params_for(variant, 7);
    World a(p, LatencyModel{}, 77), b(p, LatencyModel{}, 77);
    FaultSchedule faults;
    faults.lossRate = 0.2;
    faults.crashes = {{ServerId{3}, at_ms(4000)}, {ServerId{7}, at_ms(4100)}};
    faults.recoveries = {{ServerId{3}, at_ms(9000)}};
    a.apply(faults);
    b.apply(faults);
    a.run_until([](const World&) { return false; }, at_ms(20000));
    b.run_until([](const World&) { return false; }, at_ms(20000));
    EXPECT_EQ(a.trace().to_jsonl(), b.trace().to_jsonl()) << to_string(variant);
    EXPECT_GT(a.trace().size(), 100u);
  }
}

TEST(World, DifferentSeedsDiffer) {
  auto p = params_for(Variant::kRaft, 5);
  World a(p, LatencyModel{}, 1), b(p, LatencyModel{}, 2);
  a.run_until([](const World&) { return false; }, at_ms(5000));
  b.run_until([](const World&) { return false; }, at_ms(5000));
  EXPECT_NE(a.trace().to_jsonl(), b.trace().to_jsonl());
}

TEST(World, DeliveredDelaysRespectLatencyModel) {
  auto p = params_for(Variant::kEscape, 5);
  LatencyModel latency{millis(120), millis(130)};
  World w(p, latency, 3);
  w.run_until([](const World&) { return false; }, at_ms(10000));
  // Pair every receive with its send by (sender, recipient, message) in FIFO order.
  std::map<std::tuple<std::uint32_t, std::uint32_t, int, std::uint64_t, std::uint64_t>,
           std::deque<TimePoint>> inFlight;
  std::size_t receives = 0;
  for (const auto& r : w.trace().records()) {
    const auto* m = std::get_if<rec::MessageEvent>(&r.body);
    if (!m) continue;
    if (m->dir == rec::Direction::kSend) {
      inFlight[{r.server.value, m->peer.value, int(m->msg.kind), m->msg.term.value, m->msg.index}]
          .push_back(r.time);
    } else if (m->dir == rec::Direction::kReceive) {
      auto& q = inFlight[{m->peer.value, r.server.value, int(m->msg.kind), m->msg.term.value,
                          m->msg.index}];
      ASSERT_FALSE(q.empty());
      auto delay = r.time - q.front();
      q.pop_front();
      EXPECT_GE(delay, millis(120));
      EXPECT_LE(delay, millis(130));
      ++receives;
    }
  }
  EXPECT_GT(receives, 50u);
}

std::size_t campaigns(const Trace& t) {
  std::size_t c = 0;
  for (const auto& r : t.records()) c += std::holds_alternative<rec::CampaignStart>(r.body);
  return c;
}

TEST(World, HeartbeatsSuppressFollowerTimers) {
  // Followers keep re-arming on every heartbeat, so their queued timer
  // events all arrive stale and nobody but the first candidate campaigns.
  auto p = params_for(Variant::kEscape, 5);
  World w(p, LatencyModel{}, 11);
  w.run_until([](const World&) { return false; }, at_ms(60000));
  EXPECT_EQ(campaigns(w.trace()), 1u);
  ASSERT_TRUE(w.last_leader());
  EXPECT_EQ(*w.last_leader(), ServerId{5});
  EXPECT_EQ(w.server(ServerId{5}).role, Role::kLeader);
}

TEST(World, CrashedServerDropsDeliveries) {
  auto p = params_for(Variant::kEscape, 5);
  World w(p, LatencyModel{}, 4);
  w.schedule_crash(ServerId{2}, at_ms(3000));
  w.schedule_recover(ServerId{2}, at_ms(6000));
  w.run_until([](const World&) { return false; }, at_ms(9000));

  std::size_t crashedDrops = 0;
  bool down = false;
  for (const auto& r : w.trace().records()) {
    if (r.server == ServerId{2}) {
      if (std::holds_alternative<rec::Crash>(r.body)) down = true;
      else if (std::holds_alternative<rec::Recover>(r.body)) down = false;
      else EXPECT_FALSE(down) << format_record(r);
    }
    const auto* m = std::get_if<rec::MessageEvent>(&r.body);
    if (m && m->dir == rec::Direction::kDrop && m->reason == rec::DropReason::kCrashed) {
      EXPECT_EQ(m->peer, ServerId{2});
      EXPECT_GE(r.time, at_ms(3000));
      EXPECT_LT(r.time, at_ms(6000));
      ++crashedDrops;
    }
  }
  EXPECT_GT(crashedDrops, 3u);
  EXPECT_FALSE(w.server(ServerId{2}).crashed);

  check::CheckContext ctx;
  ctx.params = p;
  EXPECT_TRUE(check::check_trace(w.trace(), ctx).ok());
}

TEST(World, LeaderCrashElectsReplacementQuickly) {
  auto p = params_for(Variant::kEscape, 5);
  World w(p, LatencyModel{}, 8);
  w.run_until([](const World& x) { return x.last_leader().has_value(); }, at_ms(10000));
  ASSERT_EQ(*w.last_leader(), ServerId{5});
  w.run_until([](const World&) { return false; }, w.now() + millis(2000));
  const auto crashAt = w.now();
  w.schedule_crash(ServerId{5}, crashAt);
  auto reason = w.run_until(
      [](const World& x) { return x.last_leader() && *x.last_leader() != ServerId{5}; },
      crashAt + millis(20000));
  EXPECT_EQ(reason, StopReason::kStopped);
  EXPECT_LT(w.last_leader_since() - crashAt, millis(2000));
}

TEST(World, HorizonIsReportedNotThrown) {
  auto p = params_for(Variant::kRaft, 5);
  World w(p, LatencyModel{}, 8);
  EXPECT_EQ(w.run_until([](const World&) { return false; }, at_ms(1000)), StopReason::kHorizon);
  EXPECT_LE(w.now(), at_ms(1000));
}

TEST(World, ExplicitStatesMustBeOrdered) {
  auto p = params_for(Variant::kRaft, 3);
  std::vector<ServerState> states;
  for (std::uint32_t id : {2u, 1u, 3u}) states.push_back(testing::follower(p, id, Term{1}));
  EXPECT_THROW(World(p, LatencyModel{}, 1, states, at_ms(0)), Error);
}

TEST(World, PinnedTimeoutsForceSimultaneousCampaigns) {
  auto p = params_for(Variant::kRaft, 5);
  World w(p, LatencyModel{}, 21);
  for (std::uint32_t id : {2u, 4u}) w.pin_timeout({ServerId{id}, at_ms(1000), 0, {}});
  w.run_until([](const World& x) { return x.last_leader().has_value(); }, at_ms(20000));
  std::vector<std::uint32_t> firstRound;
  for (const auto& r : w.trace().records()) {
    if (std::holds_alternative<rec::CampaignStart>(r.body) && r.time == at_ms(1000)) {
      firstRound.push_back(r.server.value);
    }
  }
  EXPECT_EQ(firstRound, (std::vector<std::uint32_t>{2, 4}));
}

}  // namespace
}  // namespace escape::sim
