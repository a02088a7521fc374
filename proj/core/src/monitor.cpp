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

#include "rvmon/monitor.hpp"

#include <algorithm>
#include <cassert>
#include <set>

#include "rvmon/codec.hpp"
#include "rvmon/error.hpp"

namespace rvmon {

namespace {

std::int64_t saturating_add(std::int64_t a, std::int64_t b) {
    if (b > 0 && a > std::numeric_limits<std::int64_t>::max() - b) return std::numeric_limits<std::int64_t>::max();
    return a + b;
}

} // namespace

std::vector<EventType> Evidence::types() const {
    std::set<EventType> all(expected.begin(), expected.end());
    for (const auto& item : observed) all.insert(item.type);
    return {all.begin(), all.end()};
}

std::string Evidence::describe() const {
    std::string out;
    const auto section = [&out](std::string_view name) {
        if (!out.empty()) out += ';';
        out += name;
        out += ':';
    };
    if (!observed.empty()) {
        section("seen");
        for (std::size_t i = 0; i < observed.size(); ++i) {
            if (i > 0) out += '+';
            out += observed[i].type.name + "@" + std::to_string(observed[i].timestamp_ms);
            if (!observed[i].key.empty()) out += "/" + observed[i].key;
        }
    }
    if (!expected.empty()) {
        section("expect");
        for (std::size_t i = 0; i < expected.size(); ++i) {
            if (i > 0) out += '+';
            out += expected[i].name;
        }
    }
    if (count) {
        section("count");
        out += std::to_string(*count);
    }
    if (limit) {
        section("max");
        out += std::to_string(*limit);
    }
    return out;
}

std::string to_string(Violation::Kind kind) {
    switch (kind) {
    case Violation::Kind::missing_consequent: return "missing_consequent";
    case Violation::Kind::broken_sequence: return "broken_sequence";
    case Violation::Kind::threshold_exceeded: return "threshold_exceeded";
    case Violation::Kind::flow_imbalance: return "flow_imbalance";
    }
    return "unknown";
}

std::string format_violation(const Violation& violation) {
    std::string kind = to_string(violation.kind);
    if (violation.kind == Violation::Kind::broken_sequence) kind += "(" + std::to_string(violation.stage) + ")";
    return "VIOLATION rule=" + violation.rule_id + " kind=" + kind + " at=" + std::to_string(violation.detected_at_ms) +
           " evidence=" + codec::encode(violation.evidence.describe());
}

Monitor::Monitor(RuleSet rules) : rules_(std::move(rules)) {
    validate(rules_);
    sort_by_id(rules_);
    thresholds_.resize(rules_.rules.size());
    for (std::size_t r = 0; r < rules_.rules.size(); ++r) {
        const auto& rule = rules_.rules[r];
        if (const auto* f = std::get_if<FollowsRule>(&rule)) {
            subscriptions_[f->antecedent.name].push_back({r, Role::follows_antecedent, 0});
            subscriptions_[f->consequent.name].push_back({r, Role::follows_consequent, 0});
        } else if (const auto* s = std::get_if<SequenceRule>(&rule)) {
            for (std::size_t k = 0; k < s->stages.size(); ++k) {
                subscriptions_[s->stages[k].name].push_back({r, Role::sequence_stage, k});
            }
        } else {
            const auto& t = std::get<ThresholdRule>(rule);
            if (t.wildcard()) {
                wildcard_rules_.push_back(r);
            } else {
                subscriptions_[t.event_type.name].push_back({r, Role::threshold, 0});
                threshold_types_.insert(t.event_type.name);
            }
        }
    }
}

std::string Monitor::correlation_key(std::size_t rule, const Event& event, std::int64_t auto_counter) const {
    const auto& f = std::get<FollowsRule>(rules_.rules[rule]);
    switch (f.correlation) {
    case Correlation::session: return "session:" + *event.session_id;
    case Correlation::counter: return "counter:" + std::to_string(event.counter.value_or(auto_counter));
    case Correlation::flow: return {};
    }
    return {};
}

void Monitor::register_pending(std::size_t rule, std::size_t stage, std::string key, EvidenceEvent origin,
                               std::int64_t timestamp_ms, std::int64_t window_ms) {
    const ExpiryKey expiry{saturating_add(timestamp_ms, window_ms), rule, next_seq_++};
    QueueId queue{rule, stage, std::move(key)};
    queues_[queue].push_back(expiry);
    expiry_.emplace(expiry, Pending{std::move(queue), std::move(origin)});
}

std::optional<Monitor::Pending> Monitor::discharge(const QueueId& queue) {
    const auto it = queues_.find(queue);
    if (it == queues_.end()) return std::nullopt;
    const ExpiryKey oldest = it->second.front();
    it->second.pop_front();
    if (it->second.empty()) queues_.erase(it);
    auto node = expiry_.extract(oldest);
    return std::move(node.mapped());
}

void Monitor::expire_until(std::int64_t clock, bool at_end, std::vector<Violation>& out) {
    while (!expiry_.empty()) {
        auto first = expiry_.begin();
        const ExpiryKey key = first->first;
        if (!at_end && key.deadline >= clock) break;
        Pending pending = std::move(first->second);
        expiry_.erase(first);

        const auto queue = queues_.find(pending.queue);
        assert(queue != queues_.end() && queue->second.front() == key);
        queue->second.pop_front();
        if (queue->second.empty()) queues_.erase(queue);

        Violation v;
        v.rule_id = rule_id(rules_.rules[key.rule]);
        v.detected_at_ms = at_end ? saturating_add(key.deadline, 1) : clock;
        v.evidence.observed.push_back(std::move(pending.origin));
        if (const auto* f = std::get_if<FollowsRule>(&rules_.rules[key.rule])) {
            v.kind = Violation::Kind::missing_consequent;
            v.evidence.expected.push_back(f->consequent);
        } else {
            const auto& s = std::get<SequenceRule>(rules_.rules[key.rule]);
            v.kind = Violation::Kind::broken_sequence;
            v.stage = std::get<1>(pending.queue) + 1;
            v.evidence.expected.push_back(s.stages[v.stage]);
        }
        out.push_back(std::move(v));
    }
}

void Monitor::count_threshold(std::size_t rule, const Event& event, std::vector<Violation>& out) {
    const auto& t = std::get<ThresholdRule>(rules_.rules[rule]);
    auto& state = thresholds_[rule];
    ++state.count;
    if (state.count <= t.max_count || (t.one_shot && state.fired)) return;
    state.fired = true;
    Violation v;
    v.rule_id = t.id;
    v.kind = Violation::Kind::threshold_exceeded;
    v.detected_at_ms = event.timestamp_ms;
    v.evidence.observed.push_back({event_type_of(event), event.timestamp_ms, {}});
    v.evidence.count = state.count;
    v.evidence.limit = t.max_count;
    out.push_back(std::move(v));
}

void Monitor::process(const Event& event, std::vector<Violation>& out) {
    const EventType type = event_type_of(event);
    const std::int64_t auto_counter = arrivals_[type.name]++;
    const auto subs_it = subscriptions_.find(type.name);
    static const std::vector<Subscription> kNone;
    const auto& subs = subs_it == subscriptions_.end() ? kNone : subs_it->second;

    // Consequent side first, so an event that closes one rule and opens another sees its own
    // registration only after the discharge.
    const std::size_t first_new = out.size();
    for (const auto& sub : subs) {
        const auto& rule = rules_.rules[sub.rule];
        if (sub.role == Role::follows_consequent) {
            const auto& f = std::get<FollowsRule>(rule);
            const auto key = correlation_key(sub.rule, event, auto_counter);
            if (!discharge({sub.rule, 0, key}) && f.correlation == Correlation::flow) {
                Violation v;
                v.rule_id = f.id;
                v.kind = Violation::Kind::flow_imbalance;
                v.detected_at_ms = event.timestamp_ms;
                v.evidence.observed.push_back({type, event.timestamp_ms, key});
                v.evidence.expected.push_back(f.antecedent);
                out.push_back(std::move(v));
            }
        } else if (sub.role == Role::sequence_stage && sub.stage > 0) {
            const auto& s = std::get<SequenceRule>(rule);
            if (discharge({sub.rule, sub.stage - 1, {}})) {
                if (sub.stage + 1 < s.stages.size()) {
                    register_pending(sub.rule, sub.stage, {}, {type, event.timestamp_ms, {}}, event.timestamp_ms,
                                     s.window_ms);
                }
            } else {
                Violation v;
                v.rule_id = s.id;
                v.kind = Violation::Kind::broken_sequence;
                v.stage = sub.stage;
                v.detected_at_ms = event.timestamp_ms;
                v.evidence.observed.push_back({type, event.timestamp_ms, {}});
                v.evidence.expected.push_back(s.stages[sub.stage - 1]);
                out.push_back(std::move(v));
            }
        } else if (sub.role == Role::threshold) {
            count_threshold(sub.rule, event, out);
        }
    }
    if (!wildcard_rules_.empty() && threshold_types_.count(type.name) == 0) {
        for (const auto rule : wildcard_rules_) count_threshold(rule, event, out);
    }
    std::stable_sort(out.begin() + static_cast<std::ptrdiff_t>(first_new), out.end(),
                     [](const Violation& a, const Violation& b) { return a.rule_id < b.rule_id; });

    for (const auto& sub : subs) {
        if (sub.role == Role::follows_antecedent) {
            const auto& f = std::get<FollowsRule>(rules_.rules[sub.rule]);
            auto key = correlation_key(sub.rule, event, auto_counter);
            EvidenceEvent origin{type, event.timestamp_ms, key};
            register_pending(sub.rule, 0, std::move(key), std::move(origin), event.timestamp_ms, f.window_ms);
        } else if (sub.role == Role::sequence_stage && sub.stage == 0) {
            const auto& s = std::get<SequenceRule>(rules_.rules[sub.rule]);
            register_pending(sub.rule, 0, {}, {type, event.timestamp_ms, {}}, event.timestamp_ms, s.window_ms);
        }
    }
}

std::vector<Violation> Monitor::feed(const Event& event) {
    if (finished_) throw MonotonicityError("monitor already finished; no further events accepted");
    if (event.timestamp_ms < clock_) {
        throw MonotonicityError("late event at " + std::to_string(event.timestamp_ms) + " ms; logical clock is " +
                                std::to_string(clock_) + " ms");
    }
    const auto subs = subscriptions_.find(event_type_of(event).name);
    if (subs != subscriptions_.end() && !event.session_id) {
        for (const auto& sub : subs->second) {
            const auto* f = std::get_if<FollowsRule>(&rules_.rules[sub.rule]);
            if (f && f->correlation == Correlation::session) {
                throw ConfigurationError("rule " + f->id + " correlates by session but event " +
                                         event_type_of(event).name + " at " + std::to_string(event.timestamp_ms) +
                                         " ms has no session id");
            }
        }
    }
    std::vector<Violation> out;
    expire_until(event.timestamp_ms, false, out);
    clock_ = event.timestamp_ms;
    process(event, out);
    return out;
}

std::vector<Violation> Monitor::advance_to(std::int64_t timestamp_ms) {
    std::vector<Violation> out;
    if (finished_ || timestamp_ms <= clock_) return out;
    expire_until(timestamp_ms, false, out);
    clock_ = timestamp_ms;
    return out;
}

std::vector<Violation> Monitor::finish() {
    std::vector<Violation> out;
    if (finished_) return out;
    expire_until(0, true, out);
    finished_ = true;
    clock_ = std::numeric_limits<std::int64_t>::max();
    return out;
}

std::vector<Violation> monitor_trace(const RuleSet& rules, const Trace& trace) {
    Monitor monitor(rules);
    std::vector<Violation> all;
    for (const auto& event : trace.events) {
        auto batch = monitor.feed(event);
        all.insert(all.end(), std::make_move_iterator(batch.begin()), std::make_move_iterator(batch.end()));
    }
    auto tail = monitor.finish();
    all.insert(all.end(), std::make_move_iterator(tail.begin()), std::make_move_iterator(tail.end()));
    return all;
}

} // namespace rvmon
