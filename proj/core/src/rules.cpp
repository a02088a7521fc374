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

#include "rvmon/rules.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "rvmon/codec.hpp"
#include "rvmon/error.hpp"

namespace rvmon {

namespace {

std::string format_type(const EventType& type) {
    return codec::encode(type.name);
}

EventType parse_type(std::string_view token, std::size_t line_no, bool allow_wildcard) {
    if (token == kAnyUnknownType) {
        if (!allow_wildcard) throw ParseError(line_no, "wildcard '*' is only allowed in threshold rules");
        return EventType{std::string(kAnyUnknownType)};
    }
    try {
        return EventType{codec::decode(token)};
    } catch (const ParseError& e) {
        throw ParseError(line_no, e.detail());
    }
}

std::int64_t parse_count(std::string_view token, std::size_t line_no, std::string_view what) {
    const auto value = codec::parse_non_negative(token);
    if (!value) {
        throw ParseError(line_no, std::string(what) + " must be a non-negative integer, got '" + std::string(token) + "'");
    }
    return *value;
}

Correlation parse_correlation(std::string_view token, std::size_t line_no) {
    if (token == "session") return Correlation::session;
    if (token == "counter") return Correlation::counter;
    if (token == "flow") return Correlation::flow;
    throw ParseError(line_no, "correlation must be session, counter or flow, got '" + std::string(token) + "'");
}

void expect(const std::vector<std::string_view>& toks, std::size_t index, std::string_view word, std::size_t line_no) {
    if (index >= toks.size() || toks[index] != word) {
        throw ParseError(line_no, "expected '" + std::string(word) + "'" +
                                      (index < toks.size() ? ", got '" + std::string(toks[index]) + "'" : ""));
    }
}

Rule parse_rule(const std::vector<std::string_view>& toks, std::size_t line_no) {
    if (toks.size() < 2) throw ParseError(line_no, "rule needs an id and a kind");
    const std::string id(toks[0]);
    const auto kind = toks[1];

    if (kind == "follows") {
        if (toks.size() != 9) throw ParseError(line_no, "follows rule: <id> follows <A> -> <B> within <ms> by <mode>");
        expect(toks, 3, "->", line_no);
        expect(toks, 5, "within", line_no);
        expect(toks, 7, "by", line_no);
        return FollowsRule{id, parse_type(toks[2], line_no, false), parse_type(toks[4], line_no, false),
                           parse_count(toks[6], line_no, "window"), parse_correlation(toks[8], line_no)};
    }
    if (kind == "seq") {
        SequenceRule rule{id, {}, 0};
        std::size_t i = 2;
        while (true) {
            if (i >= toks.size()) throw ParseError(line_no, "sequence rule ends without 'within <ms>'");
            rule.stages.push_back(parse_type(toks[i], line_no, false));
            ++i;
            if (i < toks.size() && toks[i] == "->") {
                ++i;
                continue;
            }
            break;
        }
        expect(toks, i, "within", line_no);
        if (i + 2 != toks.size()) throw ParseError(line_no, "sequence rule: expected '<ms>' as last token");
        rule.window_ms = parse_count(toks[i + 1], line_no, "window");
        return rule;
    }
    if (kind == "threshold") {
        if (toks.size() != 5 && toks.size() != 6) {
            throw ParseError(line_no, "threshold rule: <id> threshold <T> max <n> [once]");
        }
        expect(toks, 3, "max", line_no);
        bool once = false;
        if (toks.size() == 6) {
            expect(toks, 5, "once", line_no);
            once = true;
        }
        return ThresholdRule{id, parse_type(toks[2], line_no, true), parse_count(toks[4], line_no, "max"), once};
    }
    throw ParseError(line_no, "unknown rule kind '" + std::string(kind) + "'");
}

void check_type_name(const std::string& id, const EventType& type) {
    if (type.name.empty()) throw ValidationError("rule " + id + ": empty event type");
    if (type.name == kAnyUnknownType) throw ValidationError("rule " + id + ": wildcard type outside a threshold rule");
}

} // namespace

std::string_view to_string(Correlation correlation) {
    switch (correlation) {
    case Correlation::session: return "session";
    case Correlation::counter: return "counter";
    case Correlation::flow: return "flow";
    }
    return "counter";
}

const std::string& rule_id(const Rule& rule) {
    return std::visit([](const auto& r) -> const std::string& { return r.id; }, rule);
}

void validate(const RuleSet& rule_set) {
    std::set<std::string> ids;
    std::set<EventType> thresholds;
    for (const auto& rule : rule_set.rules) {
        const auto& id = rule_id(rule);
        if (id.empty()) throw ValidationError("rule with empty id");
        if (id.front() == '#' || std::any_of(id.begin(), id.end(), [](char c) {
                return c == ' ' || c == '\t' || c == '\n' || c == '\r';
            })) {
            throw ValidationError("rule id '" + id + "' must not contain whitespace or start with '#'");
        }
        if (!ids.insert(id).second) throw ValidationError("rule " + id + ": duplicate id");

        if (const auto* f = std::get_if<FollowsRule>(&rule)) {
            check_type_name(id, f->antecedent);
            check_type_name(id, f->consequent);
            if (f->antecedent == f->consequent) throw ValidationError("rule " + id + ": antecedent equals consequent");
            if (f->window_ms <= 0) throw ValidationError("rule " + id + ": window must be positive");
        } else if (const auto* s = std::get_if<SequenceRule>(&rule)) {
            if (s->stages.size() < 3) throw ValidationError("rule " + id + ": sequence needs at least 3 stages");
            std::set<EventType> seen;
            for (const auto& stage : s->stages) {
                check_type_name(id, stage);
                if (!seen.insert(stage).second) {
                    throw ValidationError("rule " + id + ": stage type " + stage.name + " repeats");
                }
            }
            if (s->window_ms <= 0) throw ValidationError("rule " + id + ": window must be positive");
        } else {
            const auto& t = std::get<ThresholdRule>(rule);
            if (t.event_type.name.empty()) throw ValidationError("rule " + id + ": empty event type");
            if (t.max_count < 0) throw ValidationError("rule " + id + ": max count must be non-negative");
            if (!thresholds.insert(t.event_type).second) {
                throw ValidationError("rule " + id + ": second threshold for " + t.event_type.name);
            }
        }
    }
}

void sort_by_id(RuleSet& rule_set) {
    std::stable_sort(rule_set.rules.begin(), rule_set.rules.end(),
                     [](const Rule& a, const Rule& b) { return rule_id(a) < rule_id(b); });
}

std::string format_rule(const Rule& rule) {
    std::ostringstream out;
    if (const auto* f = std::get_if<FollowsRule>(&rule)) {
        out << f->id << " follows " << format_type(f->antecedent) << " -> " << format_type(f->consequent)
            << " within " << f->window_ms << " by " << to_string(f->correlation);
    } else if (const auto* s = std::get_if<SequenceRule>(&rule)) {
        out << s->id << " seq";
        for (std::size_t i = 0; i < s->stages.size(); ++i) {
            out << (i == 0 ? " " : " -> ") << format_type(s->stages[i]);
        }
        out << " within " << s->window_ms;
    } else {
        const auto& t = std::get<ThresholdRule>(rule);
        out << t.id << " threshold " << (t.wildcard() ? std::string(kAnyUnknownType) : format_type(t.event_type))
            << " max " << t.max_count;
        if (t.one_shot) out << " once";
    }
    return out.str();
}

RuleSet read_rules(std::istream& in) {
    RuleSet rule_set;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto toks = codec::tokens(line);
        if (toks.empty() || toks.front().front() == '#') continue;
        rule_set.rules.push_back(parse_rule(toks, line_no));
    }
    if (in.bad()) throw Error("I/O error while reading rules");
    validate(rule_set);
    return rule_set;
}

RuleSet read_rules(std::string_view text) {
    std::istringstream in{std::string(text)};
    return read_rules(in);
}

RuleSet read_rules_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open rule file " + path);
    try {
        return read_rules(in);
    } catch (const ParseError& e) {
        throw ParseError(e.line(), path + ": " + e.detail());
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

void write_rules(const RuleSet& rule_set, std::ostream& out) {
    for (const auto& rule : rule_set.rules) out << format_rule(rule) << '\n';
    if (!out) throw Error("I/O error while writing rules");
}

std::string write_rules(const RuleSet& rule_set) {
    std::ostringstream out;
    write_rules(rule_set, out);
    return out.str();
}

} // namespace rvmon
