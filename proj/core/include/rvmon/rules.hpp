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
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rvmon/event.hpp"

namespace rvmon {

enum class Correlation { session, counter, flow };

std::string_view to_string(Correlation correlation);

/// Every antecedent must be followed by a correlated consequent within `window_ms`.
struct FollowsRule {
    std::string id;
    EventType antecedent;
    EventType consequent;
    std::int64_t window_ms = 0;
    Correlation correlation = Correlation::counter;

    bool operator==(const FollowsRule&) const = default;
};

/// Chained follows: stage k must be followed by stage k+1 within `window_ms`, per token.
struct SequenceRule {
    std::string id;
    std::vector<EventType> stages;
    std::int64_t window_ms = 0;

    bool operator==(const SequenceRule&) const = default;
};

/// Wildcard type for threshold rules: any event whose type no explicit threshold rule names.
inline constexpr std::string_view kAnyUnknownType = "*";

/// Violated when the observed count of `event_type` strictly exceeds `max_count`.
struct ThresholdRule {
    std::string id;
    EventType event_type;
    std::int64_t max_count = 0;
    bool one_shot = true;

    bool wildcard() const noexcept { return event_type.name == kAnyUnknownType; }
    bool operator==(const ThresholdRule&) const = default;
};

using Rule = std::variant<FollowsRule, SequenceRule, ThresholdRule>;

const std::string& rule_id(const Rule& rule);

struct RuleSet {
    std::vector<Rule> rules;

    bool operator==(const RuleSet&) const = default;
};

/// Throws ValidationError naming the offending rule and invariant.
void validate(const RuleSet& rule_set);

/// Stable order by rule id.
void sort_by_id(RuleSet& rule_set);

/// Line format:
///   <id> follows <A> -> <B> within <ms> by <session|counter|flow>
///   <id> seq <T1> -> <T2> -> ... within <ms>
///   <id> threshold <T> max <n> [once]
/// Event type names are percent-encoded; `#` starts a comment line. Parsing does not validate.
RuleSet read_rules(std::istream& in);
RuleSet read_rules(std::string_view text);
RuleSet read_rules_file(const std::string& path);

void write_rules(const RuleSet& rule_set, std::ostream& out);
std::string write_rules(const RuleSet& rule_set);
std::string format_rule(const Rule& rule);

} // namespace rvmon
