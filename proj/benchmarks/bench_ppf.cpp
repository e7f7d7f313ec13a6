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

#include <benchmark/benchmark.h>

#include <vector>

#include "escape/ppf.h"

namespace {

using namespace escape;

void BM_Rearrange(benchmark::State& state) {
  ProtocolParams params;
  params.variant = Variant::kEscape;
  params.n = static_cast<std::uint32_t>(state.range(0));
  const ServerId leader{params.n};
  std::vector<ServerId> followers;
  for (std::uint32_t id = 1; id < params.n; ++id) followers.emplace_back(id);

  ppf::ResponsivenessTracker tracker(followers);
  auto assignment = ppf::initial_assignment(params, leader, ppf::clock_epoch(Term{3}));
  for (const auto& f : followers) {
    // Every third follower lags so the ranking is not the identity.
    if (f.value % 3 == 0) continue;
    tracker.record_reply(f, ConfigStatus{f.value * 7 % 11, millis(2000)}, assignment.clock);
  }
  for (auto _ : state) {
    auto next = ppf::rearrange_configurations(tracker, assignment, params);
    benchmark::DoNotOptimize(next);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(followers.size()));
}
BENCHMARK(BM_Rearrange)->Arg(5)->Arg(32)->Arg(128);

}  // namespace
BENCHMARK_MAIN();
