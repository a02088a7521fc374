/*
    Licensed under the Apache License, Version 2.0 (the "License");
    you may not use this file except in compliance with the License.
    You may obtain a copy of the License at

        https://www.apache.org/licenses/LICENSE-2.0

    Unless required by applicable law or agreed to in writing, software
    distributed under the License is distributed on an "AS IS" BASIS,
    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
    See the License for the specific language governing permissions and
    limitations under the License.
*/

#include <benchmark/benchmark.h>

#include "rvmon/evaluator.hpp"
#include "rvmon/miner.hpp"
#include "rvmon/monitor.hpp"
#include "rvmon/workload.hpp"

namespace {

struct Fixture {
    std::vector<rvmon::Trace> corpus;
    rvmon::RuleSet rules;
    rvmon::Trace mixed;

    Fixture() {
        corpus = rvmon::generate(rvmon::default_template(), 100);
        rules = rvmon::mine_rules(corpus);
        mixed = rvmon::mix(std::vector<rvmon::Trace>(corpus.begin(), corpus.begin() + 10), 1);
    }
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

void BM_MonitorFeed(benchmark::State& state) {
    const auto& f = fixture();
    const auto& trace = state.range(0) == 0 ? f.corpus.front() : f.mixed;
    for (auto _ : state) {
        rvmon::Monitor monitor(f.rules);
        std::size_t n = 0;
        for (const auto& e : trace.events) n += monitor.feed(e).size();
        n += monitor.finish().size();
        benchmark::DoNotOptimize(n);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * trace.events.size()));
}
BENCHMARK(BM_MonitorFeed)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_MineRules(benchmark::State& state) {
    const auto& f = fixture();
    const std::vector<rvmon::Trace> corpus(f.corpus.begin(), f.corpus.begin() + state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(rvmon::mine_rules(corpus));
}
BENCHMARK(BM_MineRules)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_OfflineCheck(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) benchmark::DoNotOptimize(rvmon::offline_check(f.mixed, f.rules));
}
BENCHMARK(BM_OfflineCheck)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
