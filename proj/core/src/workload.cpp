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

#include "rvmon/workload.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "rvmon/codec.hpp"
#include "rvmon/error.hpp"

namespace rvmon {

namespace {

constexpr std::string_view kLvm = "cinder-volume.localhost.localdomain@lvm";

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

std::int64_t sample(std::mt19937_64& rng, UniformRange range) {
    return std::uniform_int_distribution<std::int64_t>(range.lo, range.hi)(rng);
}

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ec == std::errc{} ? ptr : buf);
}

void check_range(UniformRange range, std::int64_t min_lo, const std::string& what) {
    if (range.lo < min_lo || range.hi < range.lo) {
        throw ValidationError(what + ": range [" + std::to_string(range.lo) + ", " + std::to_string(range.hi) +
                              "] must satisfy " + std::to_string(min_lo) + " <= lo <= hi");
    }
}

void check_endpoint(const std::string& sender, const std::string& service, const std::string& where) {
    Event probe;
    probe.sender = sender;
    probe.service = service;
    try {
        validate_event(probe);
    } catch (const ValidationError& e) {
        throw ValidationError(where + ": " + e.what());
    }
}

StepEvent ev(std::string_view sender, std::string service, UniformRange gap, UniformRange dur = {2, 30}) {
    return StepEvent{std::string(sender), std::move(service), gap, dur};
}

// --- template text format ---

std::int64_t int_token(const std::vector<std::string_view>& toks, std::size_t i, std::size_t line_no) {
    if (i >= toks.size()) throw ParseError(line_no, "missing integer");
    const auto value = codec::parse_non_negative(toks[i]);
    if (!value) throw ParseError(line_no, "expected non-negative integer, got '" + std::string(toks[i]) + "'");
    return *value;
}

void keyword(const std::vector<std::string_view>& toks, std::size_t i, std::string_view word, std::size_t line_no) {
    if (i >= toks.size() || toks[i] != word) throw ParseError(line_no, "expected '" + std::string(word) + "'");
}

std::string name_token(const std::vector<std::string_view>& toks, std::size_t i, std::size_t line_no) {
    if (i >= toks.size()) throw ParseError(line_no, "missing name");
    try {
        return codec::decode(toks[i]);
    } catch (const ParseError& e) {
        throw ParseError(line_no, e.detail());
    }
}

} // namespace

void validate(const WorkloadTemplate& workload) {
    if (workload.steps.empty()) throw ValidationError("workload template has no steps");
    for (std::size_t s = 0; s < workload.steps.size(); ++s) {
        const auto& step = workload.steps[s];
        const std::string where = "step " + std::to_string(s) + " (" + step.name + ")";
        if (step.name.empty()) throw ValidationError("step " + std::to_string(s) + " has no name");
        if (step.events.empty()) throw ValidationError(where + " has no events");
        if (!(step.p_error >= 0.0 && step.p_error <= 1.0)) throw ValidationError(where + ": p_error outside [0, 1]");
        for (const auto& e : step.events) {
            check_endpoint(e.sender, e.service, where);
            check_range(e.gap_ms, 1, where + " gap");
            check_range(e.duration_ms, 0, where + " duration");
        }
    }
    for (const auto& poller : workload.pollers) {
        const std::string where = "poller " + poller.sender + "_" + poller.service;
        check_endpoint(poller.sender, poller.service, where);
        check_range(poller.period_ms, 1, where + " period");
        check_range(poller.count, 0, where + " count");
        check_range(poller.duration_ms, 0, where + " duration");
        if (poller.jitter_ms < 0) throw ValidationError(where + ": negative jitter");
        if (poller.covers.empty()) throw ValidationError(where + " covers no step");
        for (const auto s : poller.covers) {
            if (s >= workload.steps.size()) throw ValidationError(where + " covers unknown step " + std::to_string(s));
        }
    }
}

WorkloadTemplate default_template() {
    WorkloadTemplate w;
    w.seed = 2020;
    w.steps = {
        {"Key Pair and Security Group",
         {ev("nova-api", "create_keypair", {20, 80}), ev("nova-api", "create_security_group", {30, 120}),
          ev("q-plugin", "create_security_group", {10, 60}), ev("q-plugin", "create_security_group_rule", {10, 60})},
         0.0},
        {"Instance Creation",
         {ev("nova-api", "create_server", {100, 400}), ev("conductor", "build_instances", {20, 100}),
          ev("scheduler", "select_destinations", {50, 300}), ev("compute", "build_and_run_instance", {50, 200}),
          ev("q-plugin", "create_port", {100, 500}), ev("compute", "spawn_instance", {200, 900}, {50, 400})},
         0.0},
        {"Volume Creation",
         {ev("cinder-api", "create_volume", {200, 600}), ev("cinder-scheduler", "create_volume", {20, 100}),
          ev(kLvm, "create_volume", {100, 800}, {20, 300}), ev("cinder-api", "volume_available", {50, 250})},
         0.30},
        {"Volume Attachment",
         {ev("nova-api", "volume_attach", {100, 300}), ev("compute", "reserve_block_device_name", {20, 120}),
          ev("compute", "attach_volume", {30, 200}), ev(kLvm, "initialize_connection", {50, 300}),
          ev(kLvm, "attach_volume", {50, 300})},
         0.25},
        {"SSH Connection",
         {ev("neutron-api", "create_network", {100, 300}), ev("neutron-api", "create_subnet", {50, 200}),
          ev("neutron-api", "create_router", {50, 200}), ev("l3-agent", "router_added_to_agent", {100, 600}),
          ev("neutron-api", "create_floatingip", {100, 400}), ev("l3-agent", "update_floatingip_statuses", {200, 900}),
          ev("nova-api", "ssh_check", {500, 1500})},
         0.0},
        {"Instance Reboot",
         {ev("nova-api", "reboot_server", {100, 300}), ev("compute", "reboot_instance", {20, 120}),
          ev("compute", "power_on_instance", {300, 1200})},
         0.0},
        {"Volume Deletion",
         {ev("nova-api", "volume_detach", {100, 300}), ev("compute", "detach_volume", {20, 120}),
          ev(kLvm, "terminate_connection", {50, 300}), ev(kLvm, "detach_volume", {50, 300}),
          ev("cinder-api", "delete_volume", {100, 400}), ev(kLvm, "delete_volume", {50, 500})},
         1.0},
        {"Instance Deletion",
         {ev("nova-api", "delete_server", {100, 300}), ev("compute", "terminate_instance", {20, 150}),
          ev("q-plugin", "delete_port", {50, 300})},
         0.0},
    };
    w.pollers = {
        {"q-plugin", "get_devices_details_list", {150, 600}, 40, {1, 4}, {1, 10}, {1}},
        {"q-plugin", "release_dhcp_port", {200, 900}, 60, {1, 3}, {1, 10}, {4}},
        {"dhcp-agent", "get_active_networks_info", {300, 1200}, 80, {2, 5}, {1, 10}, {4}},
        {"l3-agent", "report_state", {400, 1500}, 100, {3, 6}, {1, 10}, {4, 5}},
    };
    return w;
}

WorkloadTemplate read_template(std::istream& in) {
    WorkloadTemplate w;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto toks = codec::tokens(line);
        if (toks.empty() || toks.front().front() == '#') continue;
        const auto head = toks.front();
        if (head == "seed") {
            if (toks.size() != 2) throw ParseError(line_no, "seed <n>");
            w.seed = static_cast<std::uint64_t>(int_token(toks, 1, line_no));
        } else if (head == "step") {
            if (toks.size() != 2 && toks.size() != 4) throw ParseError(line_no, "step <name> [perror <p>]");
            WorkloadStep step{name_token(toks, 1, line_no), {}, 0.0};
            if (toks.size() == 4) {
                keyword(toks, 2, "perror", line_no);
                const auto p = codec::parse_rational(toks[3]);
                if (!p) throw ParseError(line_no, "perror must be a number");
                step.p_error = *p;
            }
            w.steps.push_back(std::move(step));
        } else if (head == "event") {
            if (w.steps.empty()) throw ParseError(line_no, "event before any step");
            if (toks.size() != 9) throw ParseError(line_no, "event <sender> <service> gap <lo> <hi> dur <lo> <hi>");
            keyword(toks, 3, "gap", line_no);
            keyword(toks, 6, "dur", line_no);
            w.steps.back().events.push_back(StepEvent{name_token(toks, 1, line_no), name_token(toks, 2, line_no),
                                                      {int_token(toks, 4, line_no), int_token(toks, 5, line_no)},
                                                      {int_token(toks, 7, line_no), int_token(toks, 8, line_no)}});
        } else if (head == "poller") {
            if (toks.size() != 16) {
                throw ParseError(line_no, "poller <sender> <service> period <lo> <hi> jitter <ms> count <min> <max> "
                                          "dur <lo> <hi> covers <i,...>");
            }
            keyword(toks, 3, "period", line_no);
            keyword(toks, 6, "jitter", line_no);
            keyword(toks, 8, "count", line_no);
            keyword(toks, 11, "dur", line_no);
            keyword(toks, 14, "covers", line_no);
            AsyncPoller p{name_token(toks, 1, line_no),
                          name_token(toks, 2, line_no),
                          {int_token(toks, 4, line_no), int_token(toks, 5, line_no)},
                          int_token(toks, 7, line_no),
                          {int_token(toks, 9, line_no), int_token(toks, 10, line_no)},
                          {int_token(toks, 12, line_no), int_token(toks, 13, line_no)},
                          {}};
            for (auto part : codec::split(toks[15], ',')) {
                const auto idx = codec::parse_non_negative(part);
                if (!idx) throw ParseError(line_no, "covers expects comma-separated step indices");
                p.covers.push_back(static_cast<std::size_t>(*idx));
            }
            w.pollers.push_back(std::move(p));
        } else {
            throw ParseError(line_no, "unknown template directive '" + std::string(head) + "'");
        }
    }
    validate(w);
    return w;
}

WorkloadTemplate read_template(std::string_view text) {
    std::istringstream in{std::string(text)};
    return read_template(in);
}

WorkloadTemplate read_template_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open template file " + path);
    try {
        return read_template(in);
    } catch (const ParseError& e) {
        throw ParseError(e.line(), path + ": " + e.detail());
    }
}

void write_template(const WorkloadTemplate& w, std::ostream& out) {
    out << "seed " << w.seed << '\n';
    for (const auto& step : w.steps) {
        out << "step " << codec::encode(step.name);
        if (step.p_error != 0.0) out << " perror " << format_double(step.p_error);
        out << '\n';
        for (const auto& e : step.events) {
            out << "event " << codec::encode(e.sender) << ' ' << codec::encode(e.service) << " gap " << e.gap_ms.lo << ' '
                << e.gap_ms.hi << " dur " << e.duration_ms.lo << ' ' << e.duration_ms.hi << '\n';
        }
    }
    for (const auto& p : w.pollers) {
        out << "poller " << codec::encode(p.sender) << ' ' << codec::encode(p.service) << " period " << p.period_ms.lo
            << ' ' << p.period_ms.hi << " jitter " << p.jitter_ms << " count " << p.count.lo << ' ' << p.count.hi
            << " dur " << p.duration_ms.lo << ' ' << p.duration_ms.hi << " covers ";
        for (std::size_t i = 0; i < p.covers.size(); ++i) out << (i ? "," : "") << p.covers[i];
        out << '\n';
    }
}

std::string write_template(const WorkloadTemplate& w) {
    std::ostringstream out;
    write_template(w, out);
    return out.str();
}

std::vector<Trace> generate(const WorkloadTemplate& workload, std::size_t n) {
    validate(workload);
    if (n == 0) throw ValidationError("generate needs n >= 1");
    std::vector<Trace> corpus;
    corpus.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto rng = make_rng(workload.seed, i);
        Trace trace;
        char id[32];
        std::snprintf(id, sizeof id, "trace-%04zu", i);
        trace.id = id;

        std::vector<std::int64_t> step_start(workload.steps.size(), 0);
        std::int64_t now = 0;
        for (std::size_t s = 0; s < workload.steps.size(); ++s) {
            for (std::size_t k = 0; k < workload.steps[s].events.size(); ++k) {
                const auto& spec = workload.steps[s].events[k];
                now += sample(rng, spec.gap_ms);
                if (k == 0) step_start[s] = now;
                Event e;
                e.timestamp_ms = now;
                e.sender = spec.sender;
                e.service = spec.service;
                e.duration_ms = sample(rng, spec.duration_ms);
                trace.events.push_back(std::move(e));
            }
        }
        for (const auto& poller : workload.pollers) {
            const auto count = sample(rng, poller.count);
            std::int64_t t = step_start[poller.covers.front()];
            for (std::int64_t c = 0; c < count; ++c) {
                t += sample(rng, poller.period_ms);
                Event e;
                e.timestamp_ms = t + sample(rng, {0, poller.jitter_ms});
                e.sender = poller.sender;
                e.service = poller.service;
                e.duration_ms = sample(rng, poller.duration_ms);
                trace.events.push_back(std::move(e));
            }
        }
        sort_events(trace.events);
        corpus.push_back(std::move(trace));
    }
    return corpus;
}

std::string_view to_string(FaultType type) {
    switch (type) {
    case FaultType::throw_exception: return "throw_exception";
    case FaultType::wrong_return_value: return "wrong_return_value";
    case FaultType::wrong_parameter_value: return "wrong_parameter_value";
    case FaultType::delay: return "delay";
    }
    return "throw_exception";
}

FaultType parse_fault_type(std::string_view text) {
    for (auto type : {FaultType::throw_exception, FaultType::wrong_return_value, FaultType::wrong_parameter_value,
                      FaultType::delay}) {
        if (text == to_string(type)) return type;
    }
    throw ValidationError("unknown fault type '" + std::string(text) +
                          "' (throw_exception, wrong_return_value, wrong_parameter_value, delay)");
}

std::vector<std::vector<std::size_t>> locate_steps(const Trace& trace, const WorkloadTemplate& workload) {
    std::vector<std::vector<std::size_t>> positions(workload.steps.size());
    std::size_t cursor = 0;
    for (std::size_t s = 0; s < workload.steps.size(); ++s) {
        for (const auto& spec : workload.steps[s].events) {
            while (cursor < trace.events.size() &&
                   (trace.events[cursor].sender != spec.sender || trace.events[cursor].service != spec.service)) {
                ++cursor;
            }
            if (cursor == trace.events.size()) {
                throw ValidationError("trace '" + trace.id + "' does not contain step '" + workload.steps[s].name +
                                      "' event " + spec.sender + "_" + spec.service);
            }
            positions[s].push_back(cursor++);
        }
    }
    return positions;
}

Trace inject(const Trace& trace, const FaultSpec& spec, const WorkloadTemplate& workload) {
    if (trace.label.faulty()) throw ValidationError("inject needs a fault-free trace, '" + trace.id + "' is faulty");
    if (spec.target_step >= workload.steps.size()) {
        throw ValidationError("target step " + std::to_string(spec.target_step) + " out of range (template has " +
                              std::to_string(workload.steps.size()) + " steps)");
    }
    const auto& step = workload.steps[spec.target_step];
    const double p_error = spec.p_error.value_or(step.p_error);
    if (!(p_error >= 0.0 && p_error <= 1.0)) throw ValidationError("error visibility p must be in [0, 1]");
    if (spec.type == FaultType::delay && spec.delay_ms <= 0) throw ValidationError("delay faults need delay_ms > 0");

    const AsyncPoller* storm_poller = nullptr;
    if (spec.storm) {
        for (const auto& poller : workload.pollers) {
            if (std::count(poller.covers.begin(), poller.covers.end(), spec.target_step) > 0) {
                storm_poller = &poller;
                break;
            }
        }
        if (!storm_poller) throw ValidationError("retry storm requested but step '" + step.name + "' has no poller");
        if (spec.storm->count.lo <= storm_poller->count.hi || spec.storm->count.hi < spec.storm->count.lo) {
            throw ValidationError("storm count must exceed the poller's fault-free maximum of " +
                                  std::to_string(storm_poller->count.hi));
        }
        if (spec.storm->spacing_ms <= 0) throw ValidationError("storm spacing must be positive");
    }

    const auto positions = locate_steps(trace, workload)[spec.target_step];
    auto rng = make_rng(spec.seed, spec.target_step);
    const std::size_t len = positions.size();
    const std::size_t cut = len >= 2 ? static_cast<std::size_t>(sample(rng, {1, static_cast<std::int64_t>(len - 1)})) : 0;
    const bool visible = std::bernoulli_distribution(p_error)(rng);

    Trace out = trace;
    std::set<std::string> affected;
    for (std::size_t k = cut; k < len; ++k) affected.insert(event_type_of(trace.events[positions[k]]).name);
    if (cut > 0) affected.insert(event_type_of(trace.events[positions[cut - 1]]).name);

    std::int64_t anchor_ms = trace.events[positions[cut > 0 ? cut - 1 : 0]].timestamp_ms;
    if (spec.type == FaultType::delay) {
        if (visible) out.events[positions[len - 1]].api_error = true;
        for (std::size_t i = positions[cut]; i < out.events.size(); ++i) out.events[i].timestamp_ms += spec.delay_ms;
    } else {
        if (visible && cut > 0) out.events[positions[cut - 1]].api_error = true;
        std::vector<bool> drop(out.events.size(), false);
        for (std::size_t k = cut; k < len; ++k) drop[positions[k]] = true;
        std::vector<Event> kept;
        kept.reserve(out.events.size());
        for (std::size_t i = 0; i < out.events.size(); ++i) {
            if (!drop[i]) kept.push_back(std::move(out.events[i]));
        }
        out.events = std::move(kept);
    }

    if (storm_poller) {
        const auto copies = sample(rng, spec.storm->count);
        for (std::int64_t j = 1; j <= copies; ++j) {
            Event e;
            e.timestamp_ms = anchor_ms + j * spec.storm->spacing_ms;
            e.sender = storm_poller->sender;
            e.service = storm_poller->service;
            e.duration_ms = storm_poller->duration_ms.lo;
            out.events.push_back(std::move(e));
        }
        affected.insert(storm_poller->sender + kTypeSeparator + storm_poller->service);
        sort_events(out.events);
    }

    out.id = trace.id + "-" + std::string(to_string(spec.type)) + "-step" + std::to_string(spec.target_step) + "-seed" +
             std::to_string(spec.seed);
    out.label = TraceLabel::faulty_case(step.name);
    out.label.fault_types.push_back(std::string(to_string(spec.type)));
    out.label.affected_types.assign(affected.begin(), affected.end());
    return out;
}

Trace mix(const std::vector<Trace>& traces, std::uint64_t seed) {
    if (traces.empty()) throw ValidationError("mix needs at least one trace");
    auto rng = make_rng(seed, traces.size());
    Trace out;
    std::vector<std::size_t> head(traces.size(), 0);
    std::vector<std::int64_t> origin(traces.size(), 0);
    std::size_t total = 0;
    bool any_counter = false;
    for (std::size_t i = 0; i < traces.size(); ++i) {
        if (!traces[i].events.empty()) origin[i] = traces[i].events.front().timestamp_ms;
        total += traces[i].events.size();
        for (const auto& e : traces[i].events) any_counter = any_counter || e.counter.has_value();
    }
    out.events.reserve(total);
    std::vector<std::size_t> ready;
    while (out.events.size() < total) {
        ready.clear();
        std::int64_t earliest = std::numeric_limits<std::int64_t>::max();
        for (std::size_t i = 0; i < traces.size(); ++i) {
            if (head[i] == traces[i].events.size()) continue;
            const auto t = traces[i].events[head[i]].timestamp_ms - origin[i];
            if (t < earliest) {
                earliest = t;
                ready.clear();
            }
            if (t == earliest) ready.push_back(i);
        }
        const std::size_t pick =
            ready.size() == 1 ? ready.front()
                              : ready[std::uniform_int_distribution<std::size_t>(0, ready.size() - 1)(rng)];
        Event e = traces[pick].events[head[pick]++];
        e.timestamp_ms = earliest;
        out.events.push_back(std::move(e));
    }

    std::set<std::string> affected;
    for (const auto& t : traces) {
        if (!out.id.empty()) out.id += '+';
        out.id += t.id;
        out.label.failure_cases.insert(out.label.failure_cases.end(), t.label.failure_cases.begin(),
                                       t.label.failure_cases.end());
        out.label.fault_types.insert(out.label.fault_types.end(), t.label.fault_types.begin(), t.label.fault_types.end());
        affected.insert(t.label.affected_types.begin(), t.label.affected_types.end());
    }
    out.label.affected_types.assign(affected.begin(), affected.end());
    if (traces.size() == 1) out.label = traces.front().label;
    if (any_counter) out = assign_counters(std::move(out));
    return out;
}

} // namespace rvmon
