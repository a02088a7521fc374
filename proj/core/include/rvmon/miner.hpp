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

#include <cstddef>
#include <optional>
#include <vector>

#include "rvmon/event.hpp"
#include "rvmon/rules.hpp"

namespace rvmon {

struct MiningConfig {
    // Mined windows are the largest observed gap times this factor; must be > 1.
    double window_safety_factor = 2.0;
    // Number of traces a follows pair must hold in; nullopt means every trace.
    std::optional<std::size_t> min_support;
    // Adds a `threshold * max 0 once` rule so event types never seen fault-free raise an alert.
    bool flag_unknown_events = false;
};

/// Throws ValidationError for an empty corpus, a faulty trace, or a bad config.
void check_corpus(const std::vector<Trace>& corpus, const MiningConfig& config);

/// Greedy earliest-match pairing of `antecedent` to later `consequent` events over the whole trace.
/// Returns the gaps of the matched pairs, or nullopt if the pairing fails
/// (a consequent with no open antecedent, leftover antecedents, or zero occurrences).
std::optional<std::vector<std::int64_t>> greedy_pair_gaps(const Trace& trace, const EventType& antecedent,
                                                          const EventType& consequent);

std::vector<FollowsRule> mine_follows(const std::vector<Trace>& corpus, const MiningConfig& config = {});

/// Chains mined follows rules into maximal sequences of at least three stages.
std::vector<SequenceRule> mine_sequences(const std::vector<Trace>& corpus, const std::vector<FollowsRule>& follows);

std::vector<ThresholdRule> mine_thresholds(const std::vector<Trace>& corpus, const MiningConfig& config = {});

/// All three miners; the result is sorted by rule id and validates.
RuleSet mine_rules(const std::vector<Trace>& corpus, const MiningConfig& config = {});

} // namespace rvmon
