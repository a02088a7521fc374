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

#include "rvmon/miner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <functional>
#include <map>
#include <set>

#include "rvmon/error.hpp"

namespace rvmon {

namespace {

constexpr std::size_t kMaxSequences = 4096;

struct Occurrence {
    std::size_t index = 0;
    std::int64_t timestamp_ms = 0;
};

using TypeIndex = std::map<EventType, std::vector<Occurrence>>;

TypeIndex index_by_type(const Trace& trace) {
    TypeIndex index;
    for (std::size_t i = 0; i < trace.events.size(); ++i) {
        index[event_type_of(trace.events[i])].push_back({i, trace.events[i].timestamp_ms});
    }
    return index;
}

// Earliest-first pairing over two occurrence lists in trace order; the running count of
// consequents never exceeds the running count of antecedents.
std::optional<std::int64_t> max_pair_gap(const std::vector<Occurrence>& as, const std::vector<Occurrence>& bs) {
    if (as.empty() || as.size() != bs.size()) return std::nullopt;
    std::int64_t max_gap = 0;
    for (std::size_t k = 0; k < bs.size(); ++k) {
        // The k-th consequent takes the k-th antecedent, which must come first.
        if (as[k].index >= bs[k].index) return std::nullopt;
        max_gap = std::max(max_gap, bs[k].timestamp_ms - as[k].timestamp_ms);
    }
    return max_gap;
}

std::int64_t scaled_window(std::int64_t max_gap, double factor) {
    const long double scaled = std::ceil(static_cast<long double>(max_gap) * static_cast<long double>(factor));
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(scaled));
}

std::string numbered_id(char prefix, std::size_t n, std::size_t total) {
    const int width = std::max<int>(4, static_cast<int>(std::to_string(total).size()));
    char buf[32];
    std::snprintf(buf, sizeof buf, "%c%0*zu", prefix, width, n);
    return buf;
}

// Every stage-k event (k >= 1) consumes the oldest open stage-(k-1) token; nothing may be left open.
bool chain_matches(const Trace& trace, const std::vector<EventType>& stages) {
    std::map<EventType, std::size_t> stage_of;
    for (std::size_t k = 0; k < stages.size(); ++k) stage_of[stages[k]] = k;
    std::vector<std::size_t> open(stages.size(), 0);
    std::size_t completed = 0;
    for (const auto& event : trace.events) {
        const auto it = stage_of.find(event_type_of(event));
        if (it == stage_of.end()) continue;
        const auto k = it->second;
        if (k > 0) {
            if (open[k - 1] == 0) return false;
            --open[k - 1];
        }
        if (k + 1 < stages.size()) {
            ++open[k];
        } else {
            ++completed;
        }
    }
    return completed > 0 && std::all_of(open.begin(), open.end(), [](std::size_t n) { return n == 0; });
}

} // namespace

void check_corpus(const std::vector<Trace>& corpus, const MiningConfig& config) {
    if (corpus.empty()) throw ValidationError("mining corpus is empty");
    for (const auto& trace : corpus) {
        if (trace.label.faulty()) {
            throw ValidationError("mining corpus contains faulty trace '" + trace.id + "' (" +
                                  trace.label.case_name() + ")");
        }
    }
    if (!(config.window_safety_factor > 1.0) || !std::isfinite(config.window_safety_factor)) {
        throw ValidationError("window safety factor must be a finite number > 1");
    }
    if (config.min_support && (*config.min_support < 1 || *config.min_support > corpus.size())) {
        throw ValidationError("min support must be between 1 and the corpus size");
    }
}

std::optional<std::vector<std::int64_t>> greedy_pair_gaps(const Trace& trace, const EventType& antecedent,
                                                          const EventType& consequent) {
    std::deque<std::int64_t> open;
    std::vector<std::int64_t> gaps;
    for (const auto& event : trace.events) {
        const auto type = event_type_of(event);
        if (type == consequent) {
            if (open.empty()) return std::nullopt;
            gaps.push_back(event.timestamp_ms - open.front());
            open.pop_front();
        } else if (type == antecedent) {
            open.push_back(event.timestamp_ms);
        }
    }
    if (!open.empty() || gaps.empty()) return std::nullopt;
    return gaps;
}

std::vector<FollowsRule> mine_follows(const std::vector<Trace>& corpus, const MiningConfig& config) {
    check_corpus(corpus, config);
    const std::size_t support = config.min_support.value_or(corpus.size());

    std::vector<TypeIndex> indexes;
    indexes.reserve(corpus.size());
    std::set<EventType> types;
    for (const auto& trace : corpus) {
        indexes.push_back(index_by_type(trace));
        for (const auto& [type, _] : indexes.back()) types.insert(type);
    }

    static const std::vector<Occurrence> kNone;
    const auto occurrences = [](const TypeIndex& index, const EventType& type) -> const std::vector<Occurrence>& {
        const auto it = index.find(type);
        return it == index.end() ? kNone : it->second;
    };

    std::vector<FollowsRule> rules;
    for (const auto& a : types) {
        for (const auto& b : types) {
            if (a == b) continue;
            std::size_t holds = 0;
            std::int64_t max_gap = 0;
            for (std::size_t t = 0; t < corpus.size(); ++t) {
                const auto gap = max_pair_gap(occurrences(indexes[t], a), occurrences(indexes[t], b));
                if (gap) {
                    ++holds;
                    max_gap = std::max(max_gap, *gap);
                } else if (corpus.size() - t - 1 + holds < support) {
                    break;
                }
            }
            if (holds < support) continue;
            rules.push_back(FollowsRule{"", a, b, scaled_window(max_gap, config.window_safety_factor),
                                        Correlation::counter});
        }
    }
    for (std::size_t i = 0; i < rules.size(); ++i) rules[i].id = numbered_id('F', i + 1, rules.size());
    return rules;
}

std::vector<SequenceRule> mine_sequences(const std::vector<Trace>& corpus, const std::vector<FollowsRule>& follows) {
    std::map<std::pair<EventType, EventType>, std::int64_t> window_of;
    std::map<EventType, std::set<EventType>> successors;
    for (const auto& rule : follows) {
        window_of[{rule.antecedent, rule.consequent}] = rule.window_ms;
        successors[rule.antecedent].insert(rule.consequent);
    }

    // Covering edges: a -> b with no c such that a -> c -> b.
    std::map<EventType, std::vector<EventType>> cover;
    std::map<EventType, std::size_t> in_degree;
    for (const auto& [a, bs] : successors) {
        in_degree.try_emplace(a, 0);
        for (const auto& b : bs) {
            const bool direct = std::none_of(bs.begin(), bs.end(), [&](const EventType& c) {
                const auto it = successors.find(c);
                return c != b && it != successors.end() && it->second.count(b) > 0;
            });
            if (direct) {
                cover[a].push_back(b);
                ++in_degree[b];
            }
        }
    }

    std::vector<std::vector<EventType>> chains;
    std::vector<EventType> path;
    std::set<EventType> on_path;
    std::function<void(const EventType&)> extend = [&](const EventType& node) {
        if (chains.size() >= kMaxSequences) return;
        path.push_back(node);
        on_path.insert(node);
        const auto it = cover.find(node);
        bool extended = false;
        if (it != cover.end()) {
            for (const auto& next : it->second) {
                if (on_path.count(next)) continue;
                extended = true;
                extend(next);
            }
        }
        if (!extended && path.size() >= 3) chains.push_back(path);
        on_path.erase(node);
        path.pop_back();
    };
    for (const auto& [node, degree] : in_degree) {
        if (degree == 0) extend(node);
    }

    std::sort(chains.begin(), chains.end());
    std::vector<SequenceRule> rules;
    for (auto& stages : chains) {
        const bool everywhere = !corpus.empty() && std::all_of(corpus.begin(), corpus.end(), [&](const Trace& t) {
            return chain_matches(t, stages);
        });
        if (!everywhere) continue;
        std::int64_t window = 1;
        for (std::size_t k = 0; k + 1 < stages.size(); ++k) {
            window = std::max(window, window_of.at({stages[k], stages[k + 1]}));
        }
        rules.push_back(SequenceRule{"", std::move(stages), window});
    }
    for (std::size_t i = 0; i < rules.size(); ++i) rules[i].id = numbered_id('S', i + 1, rules.size());
    return rules;
}

std::vector<ThresholdRule> mine_thresholds(const std::vector<Trace>& corpus, const MiningConfig& config) {
    check_corpus(corpus, config);
    std::map<EventType, std::int64_t> max_count;
    for (const auto& trace : corpus) {
        std::map<EventType, std::int64_t> counts;
        for (const auto& event : trace.events) ++counts[event_type_of(event)];
        for (const auto& [type, n] : counts) max_count[type] = std::max(max_count[type], n);
    }
    std::vector<ThresholdRule> rules;
    for (const auto& [type, n] : max_count) rules.push_back(ThresholdRule{"", type, n, true});
    for (std::size_t i = 0; i < rules.size(); ++i) rules[i].id = numbered_id('T', i + 1, rules.size());
    if (config.flag_unknown_events) {
        rules.push_back(ThresholdRule{numbered_id('U', 1, 1), EventType{std::string(kAnyUnknownType)}, 0, true});
    }
    return rules;
}

RuleSet mine_rules(const std::vector<Trace>& corpus, const MiningConfig& config) {
    RuleSet rule_set;
    const auto follows = mine_follows(corpus, config);
    for (const auto& rule : follows) rule_set.rules.emplace_back(rule);
    for (auto& rule : mine_sequences(corpus, follows)) rule_set.rules.emplace_back(std::move(rule));
    for (auto& rule : mine_thresholds(corpus, config)) rule_set.rules.emplace_back(std::move(rule));
    sort_by_id(rule_set);
    validate(rule_set);
    return rule_set;
}

} // namespace rvmon
