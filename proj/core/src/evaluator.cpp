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

#include "rvmon/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "rvmon/codec.hpp"
#include "rvmon/error.hpp"
#include "rvmon/workload.hpp"

namespace rvmon {

namespace {

// Kuhn's augmenting-path matching. Right vertices are added one at a time; a right vertex joins the
// matching iff an augmenting path from it exists, and matched vertices never leave the matching.
class IncrementalMatcher {
public:
    explicit IncrementalMatcher(std::size_t left_count) : match_of_left_(left_count, kUnmatched) {}

    bool add(std::size_t right, std::vector<std::size_t> neighbours) {
        if (adjacency_.size() <= right) adjacency_.resize(right + 1);
        adjacency_[right] = std::move(neighbours);
        std::vector<bool> visited(match_of_left_.size(), false);
        return augment(right, visited);
    }

    bool left_matched(std::size_t left) const { return match_of_left_[left] != kUnmatched; }

private:
    static constexpr std::size_t kUnmatched = static_cast<std::size_t>(-1);

    bool augment(std::size_t right, std::vector<bool>& visited) {
        for (const auto left : adjacency_[right]) {
            if (visited[left]) continue;
            visited[left] = true;
            if (match_of_left_[left] == kUnmatched || augment(match_of_left_[left], visited)) {
                match_of_left_[left] = right;
                return true;
            }
        }
        return false;
    }

    std::vector<std::vector<std::size_t>> adjacency_;
    std::vector<std::size_t> match_of_left_;
};

struct Indexed {
    std::vector<EventType> types;
    std::vector<std::int64_t> arrival; // per-type arrival index
};

Indexed index_trace(const Trace& trace) {
    Indexed idx;
    std::unordered_map<std::string, std::int64_t> seen;
    for (const auto& e : trace.events) {
        idx.types.push_back(event_type_of(e));
        idx.arrival.push_back(seen[idx.types.back().name]++);
    }
    return idx;
}

std::string offline_key(const FollowsRule& rule, const Event& event, std::int64_t arrival) {
    switch (rule.correlation) {
    case Correlation::session:
        if (!event.session_id) {
            throw ConfigurationError("rule " + rule.id + " correlates by session but event " +
                                     event_type_of(event).name + " has no session id");
        }
        return "session:" + *event.session_id;
    case Correlation::counter: return "counter:" + std::to_string(event.counter.value_or(arrival));
    case Correlation::flow: return {};
    }
    return {};
}

EvidenceEvent evidence_of(const Trace& trace, const Indexed& idx, std::size_t i, std::string key = {}) {
    return {idx.types[i], trace.events[i].timestamp_ms, std::move(key)};
}

bool within(const Trace& trace, std::size_t earlier, std::size_t later, std::int64_t window_ms) {
    return earlier < later && trace.events[later].timestamp_ms - trace.events[earlier].timestamp_ms <= window_ms;
}

void check_follows(const Trace& trace, const Indexed& idx, const FollowsRule& rule, std::int64_t at,
                   std::vector<Violation>& out) {
    std::vector<std::size_t> as, bs;
    std::vector<std::string> keys(trace.events.size());
    for (std::size_t i = 0; i < trace.events.size(); ++i) {
        if (idx.types[i] == rule.antecedent || idx.types[i] == rule.consequent) {
            keys[i] = offline_key(rule, trace.events[i], idx.arrival[i]);
            (idx.types[i] == rule.antecedent ? as : bs).push_back(i);
        }
    }
    IncrementalMatcher matcher(as.size());
    for (std::size_t j = 0; j < bs.size(); ++j) {
        std::vector<std::size_t> neighbours;
        for (std::size_t a = 0; a < as.size(); ++a) {
            if (keys[as[a]] == keys[bs[j]] && within(trace, as[a], bs[j], rule.window_ms)) neighbours.push_back(a);
        }
        if (!matcher.add(j, std::move(neighbours)) && rule.correlation == Correlation::flow) {
            Violation v{rule.id, Violation::Kind::flow_imbalance, 0, at, {}};
            v.evidence.observed.push_back(evidence_of(trace, idx, bs[j], keys[bs[j]]));
            v.evidence.expected.push_back(rule.antecedent);
            out.push_back(std::move(v));
        }
    }
    for (std::size_t a = 0; a < as.size(); ++a) {
        if (matcher.left_matched(a)) continue;
        Violation v{rule.id, Violation::Kind::missing_consequent, 0, at, {}};
        v.evidence.observed.push_back(evidence_of(trace, idx, as[a], keys[as[a]]));
        v.evidence.expected.push_back(rule.consequent);
        out.push_back(std::move(v));
    }
}

void check_sequence(const Trace& trace, const Indexed& idx, const SequenceRule& rule, std::int64_t at,
                    std::vector<Violation>& out) {
    std::vector<std::size_t> live;
    for (std::size_t i = 0; i < trace.events.size(); ++i) {
        if (idx.types[i] == rule.stages[0]) live.push_back(i);
    }
    for (std::size_t k = 1; k < rule.stages.size(); ++k) {
        IncrementalMatcher matcher(live.size());
        std::vector<std::size_t> next;
        std::size_t right = 0;
        for (std::size_t i = 0; i < trace.events.size(); ++i) {
            if (idx.types[i] != rule.stages[k]) continue;
            std::vector<std::size_t> neighbours;
            for (std::size_t a = 0; a < live.size(); ++a) {
                if (within(trace, live[a], i, rule.window_ms)) neighbours.push_back(a);
            }
            if (matcher.add(right++, std::move(neighbours))) {
                next.push_back(i);
            } else {
                Violation v{rule.id, Violation::Kind::broken_sequence, k, at, {}};
                v.evidence.observed.push_back(evidence_of(trace, idx, i));
                v.evidence.expected.push_back(rule.stages[k - 1]);
                out.push_back(std::move(v));
            }
        }
        for (std::size_t a = 0; a < live.size(); ++a) {
            if (matcher.left_matched(a)) continue;
            Violation v{rule.id, Violation::Kind::broken_sequence, k, at, {}};
            v.evidence.observed.push_back(evidence_of(trace, idx, live[a]));
            v.evidence.expected.push_back(rule.stages[k]);
            out.push_back(std::move(v));
        }
        live = std::move(next);
    }
}

void check_threshold(const Trace& trace, const Indexed& idx, const ThresholdRule& rule,
                     const std::set<EventType>& named, std::int64_t at, std::vector<Violation>& out) {
    std::int64_t count = 0;
    std::optional<std::size_t> last;
    for (std::size_t i = 0; i < trace.events.size(); ++i) {
        const bool hit = rule.wildcard() ? named.count(idx.types[i]) == 0 : idx.types[i] == rule.event_type;
        if (hit) {
            ++count;
            last = i;
        }
    }
    if (count <= rule.max_count) return;
    const std::int64_t violations = rule.one_shot ? 1 : count - rule.max_count;
    for (std::int64_t n = 0; n < violations; ++n) {
        Violation v{rule.id, Violation::Kind::threshold_exceeded, 0, at, {}};
        v.evidence.observed.push_back(evidence_of(trace, idx, *last));
        v.evidence.count = count;
        v.evidence.limit = rule.max_count;
        out.push_back(std::move(v));
    }
}

bool rv_detects(const Monitor& prototype, const Trace& trace) {
    Monitor monitor = prototype;
    for (const auto& event : trace.events) {
        if (!monitor.feed(event).empty()) return true;
    }
    return !monitor.finish().empty();
}

bool baseline_detects(const Trace& trace) {
    return std::any_of(trace.events.begin(), trace.events.end(), [](const Event& e) { return e.api_error; });
}

double percent(std::size_t part, std::size_t whole) {
    return whole == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(whole);
}

void finalize(CaseStats& stats) {
    stats.rv_fdc = percent(stats.rv_detected, stats.n_faulty);
    stats.baseline_fdc = percent(stats.baseline_detected, stats.n_faulty);
}

MultiUserStats summarize(std::vector<double> values) {
    const auto ms = mean_std(values);
    return MultiUserStats{ms.mean, ms.std, values.size(), std::move(values)};
}

std::string pad_right(std::string text, std::size_t width) {
    if (text.size() < width) text.append(width - text.size(), ' ');
    return text;
}

std::string pad_left(const std::string& text, std::size_t width) {
    return text.size() >= width ? text : std::string(width - text.size(), ' ') + text;
}

} // namespace

std::vector<Violation> offline_check(const Trace& trace, const RuleSet& rules) {
    validate(rules);
    RuleSet sorted = rules;
    sort_by_id(sorted);
    const Indexed idx = index_trace(trace);
    const std::int64_t at = trace.events.empty() ? 0 : trace.events.back().timestamp_ms;
    std::set<EventType> named;
    for (const auto& rule : sorted.rules) {
        if (const auto* t = std::get_if<ThresholdRule>(&rule); t && !t->wildcard()) named.insert(t->event_type);
    }
    std::vector<Violation> out;
    for (const auto& rule : sorted.rules) {
        if (const auto* f = std::get_if<FollowsRule>(&rule)) {
            check_follows(trace, idx, *f, at, out);
        } else if (const auto* s = std::get_if<SequenceRule>(&rule)) {
            check_sequence(trace, idx, *s, at, out);
        } else {
            check_threshold(trace, idx, std::get<ThresholdRule>(rule), named, at, out);
        }
    }
    return out;
}

std::map<ViolationSignature, std::size_t> signature_multiset(const std::vector<Violation>& violations) {
    std::map<ViolationSignature, std::size_t> out;
    for (const auto& v : violations) ++out[{v.rule_id, v.kind, v.stage}];
    return out;
}

double fdc(const std::vector<Detection>& results) {
    std::size_t faulty = 0, detected = 0;
    for (const auto& r : results) {
        if (!r.label.faulty()) continue;
        ++faulty;
        if (r.detected) ++detected;
    }
    if (faulty == 0) throw ValidationError("FDC needs at least one faulty entry");
    return percent(detected, faulty);
}

std::size_t false_alarms(const std::vector<Detection>& results) {
    return static_cast<std::size_t>(std::count_if(results.begin(), results.end(), [](const Detection& r) {
        return !r.label.faulty() && r.detected;
    }));
}

MeanStd mean_std(std::span<const double> values) {
    if (values.empty()) return {};
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double squares = 0.0;
    for (const double v : values) squares += (v - mean) * (v - mean);
    return {mean, std::sqrt(squares / n)};
}

CampaignReport run_campaign(const std::vector<Trace>& fault_free, const std::vector<Trace>& faulty,
                            const RuleSet& rules) {
    if (faulty.empty()) throw ValidationError("campaign needs at least one faulty trace");
    const Monitor prototype(rules);
    CampaignReport report;
    for (const auto& trace : faulty) {
        if (!trace.label.faulty()) {
            throw ValidationError("trace '" + trace.id + "' in the faulty corpus has no failure-case label");
        }
        auto& stats = report.per_case[trace.label.case_name()];
        ++stats.n_faulty;
        ++report.totals.n_faulty;
        if (rv_detects(prototype, trace)) {
            ++stats.rv_detected;
            ++report.totals.rv_detected;
        }
        if (baseline_detects(trace)) {
            ++stats.baseline_detected;
            ++report.totals.baseline_detected;
        }
    }
    for (auto& [_, stats] : report.per_case) finalize(stats);
    finalize(report.totals);
    for (const auto& trace : fault_free) {
        if (trace.label.faulty()) throw ValidationError("trace '" + trace.id + "' in the fault-free corpus is labeled faulty");
        ++report.n_fault_free;
        if (rv_detects(prototype, trace)) ++report.false_alarms;
    }
    return report;
}

std::map<std::string, MultiUserStats> run_multiuser(const std::vector<Trace>& fault_free,
                                                    const std::vector<Trace>& faulty, const RuleSet& rules,
                                                    const MultiUserConfig& config) {
    if (config.repetitions < 1) throw ValidationError("multi-user analysis needs at least one repetition");
    if (config.k_faulty < 1) throw ValidationError("multi-user analysis needs k_faulty >= 1");
    if (fault_free.size() < config.k_free) {
        throw ValidationError("insufficient fault-free traces: need " + std::to_string(config.k_free) + ", have " +
                              std::to_string(fault_free.size()));
    }
    std::map<std::string, std::vector<const Trace*>> by_case;
    for (const auto& trace : faulty) {
        if (!trace.label.faulty()) throw ValidationError("trace '" + trace.id + "' has no failure-case label");
        by_case[trace.label.case_name()].push_back(&trace);
    }
    if (by_case.empty()) throw ValidationError("multi-user analysis needs faulty traces");

    const Monitor prototype(rules);
    std::map<std::string, MultiUserStats> out;
    std::vector<double> pooled;
    std::uint64_t case_index = 0;
    for (const auto& [name, pool] : by_case) {
        if (pool.size() < config.k_faulty) {
            throw ValidationError("insufficient faulty traces for '" + name + "': need " +
                                  std::to_string(config.k_faulty) + ", have " + std::to_string(pool.size()));
        }
        std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                          static_cast<std::uint32_t>(case_index++)};
        std::mt19937_64 rng(seq);
        std::vector<std::size_t> free_idx(fault_free.size()), faulty_idx(pool.size());
        std::vector<double> per_rep;
        for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
            std::iota(free_idx.begin(), free_idx.end(), 0);
            std::iota(faulty_idx.begin(), faulty_idx.end(), 0);
            std::shuffle(free_idx.begin(), free_idx.end(), rng);
            std::shuffle(faulty_idx.begin(), faulty_idx.end(), rng);
            std::vector<Trace> constituents;
            for (std::size_t i = 0; i < config.k_free; ++i) constituents.push_back(fault_free[free_idx[i]]);
            for (std::size_t i = 0; i < config.k_faulty; ++i) constituents.push_back(*pool[faulty_idx[i]]);
            const Trace mixed = mix(constituents, rng());

            Monitor monitor = prototype;
            std::vector<Violation> violations;
            for (const auto& event : mixed.events) {
                auto batch = monitor.feed(event);
                violations.insert(violations.end(), batch.begin(), batch.end());
            }
            auto tail = monitor.finish();
            violations.insert(violations.end(), tail.begin(), tail.end());
            std::set<std::string> flagged;
            for (const auto& v : violations) {
                for (const auto& type : v.evidence.types()) flagged.insert(type.name);
            }

            std::size_t detected = 0;
            for (std::size_t i = config.k_free; i < constituents.size(); ++i) {
                const auto& affected = constituents[i].label.affected_types;
                const bool hit = affected.empty() ? !violations.empty()
                                                  : std::any_of(affected.begin(), affected.end(), [&](const auto& t) {
                                                        return flagged.count(t) > 0;
                                                    });
                if (hit) ++detected;
            }
            per_rep.push_back(percent(detected, config.k_faulty));
        }
        pooled.insert(pooled.end(), per_rep.begin(), per_rep.end());
        out[name] = summarize(std::move(per_rep));
    }
    out[std::string(kTotalRow)] = summarize(std::move(pooled));
    return out;
}

std::string format_report_table(const CampaignReport& report) {
    constexpr std::size_t kName = 28, kNum = 10, kPct = 20;
    std::ostringstream out;
    out << pad_right("Failure Case", kName) << pad_left("Faulty", kNum) << pad_left("API Errors FDC %", kPct)
        << pad_left("RV FDC %", kPct) << '\n';
    const auto row = [&](const std::string& name, const CaseStats& s) {
        out << pad_right(name, kName) << pad_left(std::to_string(s.n_faulty), kNum)
            << pad_left(codec::format_fixed(s.baseline_fdc, 2), kPct) << pad_left(codec::format_fixed(s.rv_fdc, 2), kPct)
            << '\n';
    };
    for (const auto& [name, stats] : report.per_case) row(name, stats);
    row(std::string(kTotalRow), report.totals);
    out << "Fault-free traces: " << report.n_fault_free << ", false alarms: " << report.false_alarms << '\n';

    if (report.multiuser) {
        out << '\n' << pad_right("Failure Case", kName) << pad_left("Avg FDC % (mean ± std)", kPct + 7)
            << pad_left("Reps", kNum) << '\n';
        const auto mrow = [&](const std::string& name, const MultiUserStats& s) {
            out << pad_right(name, kName)
                << pad_left(codec::format_fixed(s.mean_fdc, 2) + " ± " + codec::format_fixed(s.std_fdc, 2), kPct + 7)
                << pad_left(std::to_string(s.repetitions), kNum) << '\n';
        };
        for (const auto& [name, stats] : *report.multiuser) {
            if (name != kTotalRow) mrow(name, stats);
        }
        if (const auto it = report.multiuser->find(std::string(kTotalRow)); it != report.multiuser->end()) {
            mrow(it->first, it->second);
        }
        out << "Attribution: a faulty constituent is detected when a violation's evidence types overlap its "
               "injected step or storm types.\n";
    }
    return out.str();
}

std::string format_report_lines(const CampaignReport& report) {
    std::ostringstream out;
    const auto fields = [&](const CaseStats& s) {
        out << " n_faulty=" << s.n_faulty << " rv_detected=" << s.rv_detected
            << " baseline_detected=" << s.baseline_detected << " rv_fdc=" << codec::format_fixed(s.rv_fdc, 2)
            << " baseline_fdc=" << codec::format_fixed(s.baseline_fdc, 2) << '\n';
    };
    for (const auto& [name, stats] : report.per_case) {
        out << "CASE name=" << codec::encode(name);
        fields(stats);
    }
    out << "TOTAL";
    fields(report.totals);
    out << "FALSE_ALARMS fault_free=" << report.n_fault_free << " flagged=" << report.false_alarms << '\n';
    if (report.multiuser) {
        for (const auto& [name, s] : *report.multiuser) {
            out << "MULTIUSER name=" << codec::encode(name) << " mean=" << codec::format_fixed(s.mean_fdc, 2)
                << " std=" << codec::format_fixed(s.std_fdc, 2) << " reps=" << s.repetitions << '\n';
        }
    }
    return out.str();
}

} // namespace rvmon
