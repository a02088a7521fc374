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

#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "rvmon/event.hpp"
#include "rvmon/monitor.hpp"
#include "rvmon/rules.hpp"

namespace rvmon::testing {

/// Event of type `<sender>_<service>` at `ts`; `type` must contain the separator.
Event make_event(const std::string& type, std::int64_t ts);
Trace make_trace(const std::vector<std::pair<std::string, std::int64_t>>& events, std::string id = "t");

struct RandomTraceConfig {
    std::vector<std::string> alphabet = {"a_x", "b_y", "c_z"};
    std::size_t min_len = 0;
    std::size_t max_len = 30;
    std::int64_t max_gap_ms = 500;
    bool sessions = false;
    bool explicit_counters = false;
};

Trace random_trace(std::mt19937_64& rng, const RandomTraceConfig& config);

/// Mixed follows (all correlations), sequence and threshold rules over `alphabet`, ids R001...
RuleSet random_rule_set(std::mt19937_64& rng, const std::vector<std::string>& alphabet, bool sessions);

/// Corpus of perturbed copies of one random skeleton, so that many follows pairs and chains hold.
std::vector<Trace> random_corpus(std::mt19937_64& rng, std::size_t traces, std::size_t alphabet_size = 5);

/// Random trace exercising every optional field and encodable character.
Trace random_serializable_trace(std::mt19937_64& rng);
RuleSet random_serializable_rules(std::mt19937_64& rng);

/// Size of a maximum bipartite matching by exhaustive search; `edge(a, b)` tells if left a may take right b.
template <typename Edge>
std::size_t brute_max_matching(std::size_t left, std::size_t right, const Edge& edge) {
    std::vector<bool> used(left, false);
    std::size_t best = 0;
    auto go = [&](auto& self, std::size_t b, std::size_t matched) -> void {
        if (matched + (right - b) <= best) return;
        if (b == right) {
            best = matched;
            return;
        }
        for (std::size_t a = 0; a < left; ++a) {
            if (used[a] || !edge(a, b)) continue;
            used[a] = true;
            self(self, b + 1, matched + 1);
            used[a] = false;
        }
        self(self, b + 1, matched);
    };
    go(go, 0, 0);
    return best;
}

/// Every A can be paired one-to-one with a later B and vice versa, with at least one pair.
bool pair_holds_bruteforce(const Trace& trace, const EventType& a, const EventType& b);

/// Stage events split exactly into complete, index-ordered chains, at least one of them.
bool chain_holds_bruteforce(const Trace& trace, const std::vector<EventType>& stages);

/// Violation multiset of follows and threshold rules computed by exhaustive matching; sequence rules
/// are skipped.
std::multiset<std::pair<std::string, Violation::Kind>> brute_follows_threshold_verdicts(const Trace& trace,
                                                                                        const RuleSet& rules);

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& name);

} // namespace rvmon::testing
