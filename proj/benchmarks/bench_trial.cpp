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

#include "escape/harness.h"
#include "escape/suites.h"

namespace {

using namespace escape;

void run_trials(benchmark::State& state, Variant variant) {
  auto scenario = suites::base_scenario(variant, static_cast<std::uint32_t>(state.range(0)));
  std::uint32_t trial = 0;
  for (auto _ : state) {
    auto out = harness::run_trial(scenario, trial++);
    benchmark::DoNotOptimize(out.result);
  }
  state.SetItemsProcessed(state.iterations());
}

void BM_EscapeTrial(benchmark::State& state) { run_trials(state, Variant::kEscape); }
void BM_RaftTrial(benchmark::State& state) { run_trials(state, Variant::kRaft); }

BENCHMARK(BM_EscapeTrial)->Arg(8)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RaftTrial)->Arg(8)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace
