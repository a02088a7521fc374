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

#include "support.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

namespace rvmon::testing {

namespace {

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

std::int64_t between(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

std::string random_text(std::mt19937_64& rng, std::size_t max_len, bool allow_separator) {
    static const std::string kChars = "abcXYZ09.-@%, =\t/\x01\x7f";
    std::string out;
    const auto len = 1 + pick(rng, max_len);
    while (out.size() < len) {
        const char c = kChars[pick(rng, kChars.size())];
        out.push_back(c);
        if (allow_separator && pick(rng, 6) == 0) out.push_back('_');
    }
    return out;
}

std::string key_of(const FollowsRule& rule, const Event& e, std::int64_t arrival) {
    switch (rule.correlation) {
    case Correlation::session: return "s" + e.session_id.value_or("");
    case Correlation::counter: return "c" + std::to_string(e.counter.value_or(arrival));
    case Correlation::flow: return "";
    }
    return "";
}

} // namespace

Event make_event(const std::string& type, std::int64_t ts) {
    const auto sep = type.find(kTypeSeparator);
    Event e;
    e.timestamp_ms = ts;
    e.sender = type.substr(0, sep);
    e.service = type.substr(sep + 1);
    return e;
}

Trace make_trace(const std::vector<std::pair<std::string, std::int64_t>>& events, std::string id) {
    Trace t;
    t.id = std::move(id);
    for (const auto& [type, ts] : events) t.events.push_back(make_event(type, ts));
    return t;
}

Trace random_trace(std::mt19937_64& rng, const RandomTraceConfig& config) {
    Trace t;
    t.id = "random";
    const auto len = static_cast<std::size_t>(
        between(rng, static_cast<std::int64_t>(config.min_len), static_cast<std::int64_t>(config.max_len)));
    std::int64_t ts = between(rng, 0, config.max_gap_ms);
    for (std::size_t i = 0; i < len; ++i) {
        auto e = make_event(config.alphabet[pick(rng, config.alphabet.size())], ts);
        if (config.sessions) e.session_id = "u" + std::to_string(pick(rng, 2));
        if (config.explicit_counters) e.counter = static_cast<std::int64_t>(pick(rng, 3));
        t.events.push_back(std::move(e));
        ts += pick(rng, 4) == 0 ? 0 : between(rng, 1, config.max_gap_ms);
    }
    return t;
}

RuleSet random_rule_set(std::mt19937_64& rng, const std::vector<std::string>& alphabet, bool sessions) {
    RuleSet set;
    std::size_t n = 0;
    const auto next_id = [&] {
        char buf[24];
        std::snprintf(buf, sizeof buf, "R%03zu", ++n);
        return std::string(buf);
    };
    const auto type = [&] { return EventType{alphabet[pick(rng, alphabet.size())]}; };
    const auto window = [&] { return between(rng, 1, 1500); };

    const auto follows = 1 + pick(rng, 3);
    for (std::size_t i = 0; i < follows; ++i) {
        auto a = type(), b = type();
        while (b == a) b = type();
        Correlation c = static_cast<Correlation>(pick(rng, 3));
        if (c == Correlation::session && !sessions) c = Correlation::counter;
        set.rules.emplace_back(FollowsRule{next_id(), a, b, window(), c});
    }
    if (alphabet.size() >= 3 && pick(rng, 3) != 0) {
        std::vector<std::string> stages = alphabet;
        std::shuffle(stages.begin(), stages.end(), rng);
        stages.resize(3 + pick(rng, std::min<std::size_t>(alphabet.size() - 2, 2)));
        SequenceRule s{next_id(), {}, window()};
        for (auto& name : stages) s.stages.push_back(EventType{name});
        set.rules.emplace_back(std::move(s));
    }
    std::set<EventType> named;
    const auto thresholds = pick(rng, 3);
    for (std::size_t i = 0; i < thresholds; ++i) {
        const auto t = type();
        if (!named.insert(t).second) continue;
        set.rules.emplace_back(ThresholdRule{next_id(), t, between(rng, 0, 4), pick(rng, 2) == 0});
    }
    if (pick(rng, 3) == 0) {
        set.rules.emplace_back(
            ThresholdRule{next_id(), EventType{std::string(kAnyUnknownType)}, between(rng, 0, 3), pick(rng, 2) == 0});
    }
    return set;
}

std::vector<Trace> random_corpus(std::mt19937_64& rng, std::size_t traces, std::size_t alphabet_size) {
    std::vector<std::string> alphabet;
    for (std::size_t i = 0; i < alphabet_size; ++i) alphabet.push_back("s" + std::to_string(i) + "_op");
    std::vector<std::string> skeleton;
    const auto len = static_cast<std::size_t>(between(rng, 4, 15));
    for (std::size_t i = 0; i < len; ++i) skeleton.push_back(alphabet[pick(rng, alphabet.size())]);

    std::vector<Trace> corpus;
    for (std::size_t t = 0; t < traces; ++t) {
        auto order = skeleton;
        const auto swaps = pick(rng, 4);
        for (std::size_t i = 0; i < swaps && order.size() > 1; ++i) {
            const auto at = pick(rng, order.size() - 1);
            std::swap(order[at], order[at + 1]);
        }
        if (pick(rng, 5) == 0) order.erase(order.begin() + static_cast<std::ptrdiff_t>(pick(rng, order.size())));
        if (pick(rng, 5) == 0) order.push_back(alphabet[pick(rng, alphabet.size())]);
        Trace trace;
        trace.id = "r" + std::to_string(t);
        std::int64_t ts = between(rng, 0, 100);
        for (const auto& type : order) {
            trace.events.push_back(make_event(type, ts));
            ts += pick(rng, 4) == 0 ? 0 : between(rng, 1, 400);
        }
        corpus.push_back(std::move(trace));
    }
    return corpus;
}

Trace random_serializable_trace(std::mt19937_64& rng) {
    Trace t;
    t.id = random_text(rng, 12, true);
    if (pick(rng, 2) == 0) {
        const auto n = 1 + pick(rng, 2);
        for (std::size_t i = 0; i < n; ++i) {
            t.label.failure_cases.push_back(random_text(rng, 10, true));
            t.label.fault_types.push_back(random_text(rng, 6, true));
        }
        t.label.affected_types.push_back(random_text(rng, 6, false) + "_" + random_text(rng, 6, true));
    }
    std::int64_t ts = 0;
    const auto len = pick(rng, 40);
    for (std::size_t i = 0; i < len; ++i) {
        Event e;
        ts += between(rng, 0, 100000);
        e.timestamp_ms = ts;
        e.sender = random_text(rng, 8, false);
        e.service = random_text(rng, 10, true);
        e.duration_ms = between(rng, 0, 5000);
        if (pick(rng, 2) == 0) e.counter = between(rng, 0, 1000000);
        if (pick(rng, 2) == 0) e.session_id = random_text(rng, 8, true);
        e.api_error = pick(rng, 4) == 0;
        t.events.push_back(std::move(e));
    }
    return t;
}

RuleSet random_serializable_rules(std::mt19937_64& rng) {
    RuleSet set;
    const auto type = [&] { return EventType{random_text(rng, 6, false) + "_" + random_text(rng, 8, true)}; };
    const auto n = 1 + pick(rng, 8);
    std::set<EventType> named;
    for (std::size_t i = 0; i < n; ++i) {
        const std::string id = "r" + std::to_string(i) + "-" + std::to_string(pick(rng, 1000)) + "_x";
        switch (pick(rng, 3)) {
        case 0: {
            auto a = type(), b = type();
            while (b == a) b = type();
            set.rules.emplace_back(
                FollowsRule{id, a, b, between(rng, 1, 1000000), static_cast<Correlation>(pick(rng, 3))});
            break;
        }
        case 1: {
            SequenceRule s{id, {}, between(rng, 1, 1000000)};
            const auto stages = 3 + pick(rng, 4);
            std::set<EventType> seen;
            while (s.stages.size() < stages) {
                auto t = type();
                if (seen.insert(t).second) s.stages.push_back(std::move(t));
            }
            set.rules.emplace_back(std::move(s));
            break;
        }
        default: {
            auto t = pick(rng, 5) == 0 ? EventType{std::string(kAnyUnknownType)} : type();
            if (!named.insert(t).second) break;
            set.rules.emplace_back(ThresholdRule{id, t, between(rng, 0, 1000), pick(rng, 2) == 0});
        }
        }
    }
    return set;
}

bool pair_holds_bruteforce(const Trace& trace, const EventType& a, const EventType& b) {
    std::vector<std::size_t> as, bs;
    for (std::size_t i = 0; i < trace.events.size(); ++i) {
        const auto t = event_type_of(trace.events[i]);
        if (t == a) as.push_back(i);
        if (t == b) bs.push_back(i);
    }
    if (as.empty() || as.size() != bs.size()) return false;
    const auto m = brute_max_matching(as.size(), bs.size(), [&](std::size_t x, std::size_t y) { return as[x] < bs[y]; });
    return m == as.size();
}

bool chain_holds_bruteforce(const Trace& trace, const std::vector<EventType>& stages) {
    std::vector<std::vector<std::size_t>> by_stage(stages.size());
    for (std::size_t i = 0; i < trace.events.size(); ++i) {
        const auto t = event_type_of(trace.events[i]);
        for (std::size_t k = 0; k < stages.size(); ++k) {
            if (stages[k] == t) by_stage[k].push_back(i);
        }
    }
    const auto n = by_stage[0].size();
    if (n == 0) return false;
    for (const auto& s : by_stage) {
        if (s.size() != n) return false;
    }
    // Each round starts a chain at the first free stage-0 event and backtracks over the rest.
    std::vector<std::vector<bool>> used(stages.size(), std::vector<bool>(n, false));
    auto extend = [&](auto& self, std::size_t built) -> bool {
        if (built == n) return true;
        std::size_t first = 0;
        while (used[0][first]) ++first;
        used[0][first] = true;
        auto walk = [&](auto& inner, std::size_t k, std::size_t prev) -> bool {
            if (k == stages.size()) return self(self, built + 1);
            for (std::size_t j = 0; j < n; ++j) {
                if (used[k][j] || by_stage[k][j] < prev) continue;
                used[k][j] = true;
                if (inner(inner, k + 1, by_stage[k][j])) return true;
                used[k][j] = false;
            }
            return false;
        };
        const bool ok = walk(walk, 1, by_stage[0][first]);
        if (!ok) used[0][first] = false;
        return ok;
    };
    return extend(extend, 0);
}

std::multiset<std::pair<std::string, Violation::Kind>> brute_follows_threshold_verdicts(const Trace& trace,
                                                                                        const RuleSet& rules) {
    std::multiset<std::pair<std::string, Violation::Kind>> out;
    std::vector<std::int64_t> arrival;
    std::map<std::string, std::int64_t> seen;
    for (const auto& e : trace.events) arrival.push_back(seen[event_type_of(e).name]++);
    std::set<EventType> named;
    for (const auto& r : rules.rules) {
        if (const auto* t = std::get_if<ThresholdRule>(&r); t && !t->wildcard()) named.insert(t->event_type);
    }
    for (const auto& r : rules.rules) {
        if (const auto* f = std::get_if<FollowsRule>(&r)) {
            std::vector<std::size_t> as, bs;
            for (std::size_t i = 0; i < trace.events.size(); ++i) {
                const auto t = event_type_of(trace.events[i]);
                if (t == f->antecedent) as.push_back(i);
                if (t == f->consequent) bs.push_back(i);
            }
            const auto m = brute_max_matching(as.size(), bs.size(), [&](std::size_t x, std::size_t y) {
                const auto& ea = trace.events[as[x]];
                const auto& eb = trace.events[bs[y]];
                return as[x] < bs[y] && eb.timestamp_ms - ea.timestamp_ms <= f->window_ms &&
                       key_of(*f, ea, arrival[as[x]]) == key_of(*f, eb, arrival[bs[y]]);
            });
            for (std::size_t i = m; i < as.size(); ++i) out.emplace(f->id, Violation::Kind::missing_consequent);
            if (f->correlation == Correlation::flow) {
                for (std::size_t i = m; i < bs.size(); ++i) out.emplace(f->id, Violation::Kind::flow_imbalance);
            }
        } else if (const auto* t = std::get_if<ThresholdRule>(&r)) {
            std::int64_t count = 0;
            for (const auto& e : trace.events) {
                const auto type = event_type_of(e);
                if (t->wildcard() ? named.count(type) == 0 : type == t->event_type) ++count;
            }
            const auto n = count <= t->max_count ? 0 : (t->one_shot ? 1 : count - t->max_count);
            for (std::int64_t i = 0; i < n; ++i) out.emplace(t->id, Violation::Kind::threshold_exceeded);
        }
    }
    return out;
}

std::filesystem::path temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("rvmon-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace rvmon::testing
