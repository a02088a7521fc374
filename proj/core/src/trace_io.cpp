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

#include "rvmon/trace_io.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include "rvmon/codec.hpp"
#include "rvmon/error.hpp"

namespace rvmon {

namespace {

std::string join_encoded(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& item : items) {
        if (!out.empty()) out += ',';
        out += codec::encode(item);
    }
    return out;
}

std::vector<std::string> split_decoded(std::string_view text, std::size_t line_no) {
    std::vector<std::string> out;
    if (text.empty()) return out;
    for (auto part : codec::split(text, ',')) {
        if (part.empty()) throw ParseError(line_no, "empty list item in '" + std::string(text) + "'");
        out.push_back(codec::decode(part));
    }
    return out;
}

std::pair<std::string_view, std::string_view> split_field(std::string_view token, std::size_t line_no) {
    const auto eq = token.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        throw ParseError(line_no, "expected key=value, got '" + std::string(token) + "'");
    }
    return {token.substr(0, eq), token.substr(eq + 1)};
}

std::int64_t parse_int_field(std::string_view key, std::string_view value, std::size_t line_no) {
    const auto parsed = codec::parse_non_negative(value);
    if (!parsed) {
        throw ParseError(line_no, "field " + std::string(key) + " must be a non-negative integer, got '" +
                                      std::string(value) + "'");
    }
    return *parsed;
}

std::string decode_field(std::string_view value, std::size_t line_no) {
    try {
        return codec::decode(value);
    } catch (const ParseError& e) {
        throw ParseError(line_no, e.detail());
    }
}

TraceLabel parse_label(std::string_view value, std::size_t line_no) {
    if (value == "fault_free") return TraceLabel::fault_free();
    constexpr std::string_view kFaulty = "faulty:";
    if (value.substr(0, kFaulty.size()) != kFaulty) {
        throw ParseError(line_no, "label must be fault_free or faulty:NAME, got '" + std::string(value) + "'");
    }
    TraceLabel label;
    label.failure_cases = split_decoded(value.substr(kFaulty.size()), line_no);
    if (label.failure_cases.empty()) throw ParseError(line_no, "faulty label without failure case");
    return label;
}

void parse_header(std::string_view line, std::size_t line_no, Trace& trace) {
    const auto toks = codec::tokens(line);
    if (toks.size() < 2 || toks[0] != kTraceMagic) throw ParseError(line_no, "bad trace header");
    if (toks[1] != kTraceSchema) {
        throw ParseError(line_no, "unsupported trace schema '" + std::string(toks[1]) + "'");
    }
    bool seen_label = false, seen_id = false, seen_fault = false, seen_affects = false;
    const auto once = [&](bool& flag, std::string_view key) {
        if (flag) throw ParseError(line_no, "duplicate header field " + std::string(key));
        flag = true;
    };
    for (std::size_t i = 2; i < toks.size(); ++i) {
        const auto [key, value] = split_field(toks[i], line_no);
        if (key == "label") {
            once(seen_label, key);
            const auto fault_types = std::move(trace.label.fault_types);
            const auto affected = std::move(trace.label.affected_types);
            trace.label = parse_label(value, line_no);
            trace.label.fault_types = fault_types;
            trace.label.affected_types = affected;
        } else if (key == "id") {
            once(seen_id, key);
            trace.id = decode_field(value, line_no);
        } else if (key == "fault") {
            once(seen_fault, key);
            trace.label.fault_types = split_decoded(value, line_no);
        } else if (key == "affects") {
            once(seen_affects, key);
            trace.label.affected_types = split_decoded(value, line_no);
        } else {
            throw ParseError(line_no, "unknown header field '" + std::string(key) + "'");
        }
    }
}

} // namespace

std::string format_label(const TraceLabel& label) {
    if (!label.faulty()) return "fault_free";
    return "faulty:" + join_encoded(label.failure_cases);
}

std::string format_event(const Event& event) {
    std::string line = "ts=" + std::to_string(event.timestamp_ms);
    line += " sender=" + codec::encode(event.sender);
    line += " service=" + codec::encode(event.service);
    line += " dur=" + std::to_string(event.duration_ms);
    if (event.counter) line += " counter=" + std::to_string(*event.counter);
    if (event.session_id) line += " session=" + codec::encode(*event.session_id);
    if (event.api_error) line += " api_error=1";
    return line;
}

Event parse_event(std::string_view line, std::size_t line_no) {
    Event event;
    bool has_ts = false, has_sender = false, has_service = false, has_dur = false;
    bool has_api_error = false;
    for (auto token : codec::tokens(line)) {
        const auto [key, value] = split_field(token, line_no);
        const auto once = [&](bool already) {
            if (already) throw ParseError(line_no, "duplicate field " + std::string(key));
        };
        if (key == "ts") {
            once(has_ts);
            has_ts = true;
            event.timestamp_ms = parse_int_field(key, value, line_no);
        } else if (key == "sender") {
            once(has_sender);
            has_sender = true;
            event.sender = decode_field(value, line_no);
        } else if (key == "service") {
            once(has_service);
            has_service = true;
            event.service = decode_field(value, line_no);
        } else if (key == "dur") {
            once(has_dur);
            has_dur = true;
            event.duration_ms = parse_int_field(key, value, line_no);
        } else if (key == "counter") {
            once(event.counter.has_value());
            event.counter = parse_int_field(key, value, line_no);
        } else if (key == "session") {
            once(event.session_id.has_value());
            event.session_id = decode_field(value, line_no);
        } else if (key == "api_error") {
            once(has_api_error);
            has_api_error = true;
            if (value != "0" && value != "1") throw ParseError(line_no, "api_error must be 0 or 1");
            event.api_error = value == "1";
        } else {
            throw ParseError(line_no, "unknown event field '" + std::string(key) + "'");
        }
    }
    if (!has_ts || !has_sender || !has_service || !has_dur) {
        throw ParseError(line_no, "event record needs ts, sender, service and dur");
    }
    try {
        validate_event(event);
    } catch (const ValidationError& e) {
        throw ParseError(line_no, e.what());
    }
    return event;
}

Trace read_trace(std::istream& in) {
    Trace trace;
    std::string line;
    std::size_t line_no = 0;
    bool first_content = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (codec::tokens(line).empty()) continue;
        const bool is_header = line.rfind(kTraceMagic, 0) == 0;
        if (is_header) {
            if (!first_content) throw ParseError(line_no, "trace header must be the first record");
            parse_header(line, line_no, trace);
        } else if (line.front() != '#') {
            trace.events.push_back(parse_event(line, line_no));
        }
        first_content = false;
    }
    if (in.bad()) throw Error("I/O error while reading trace");
    sort_events(trace.events);
    return trace;
}

Trace read_trace(std::string_view text) {
    std::istringstream in{std::string(text)};
    return read_trace(in);
}

Trace read_trace_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open trace file " + path.string());
    try {
        return read_trace(in);
    } catch (const ParseError& e) {
        throw ParseError(e.line(), path.string() + ": " + e.detail());
    }
}

void write_trace(const Trace& trace, std::ostream& out) {
    out << kTraceMagic << ' ' << kTraceSchema << " label=" << format_label(trace.label)
        << " id=" << codec::encode(trace.id);
    if (!trace.label.fault_types.empty()) out << " fault=" << join_encoded(trace.label.fault_types);
    if (!trace.label.affected_types.empty()) out << " affects=" << join_encoded(trace.label.affected_types);
    out << '\n';
    for (const auto& event : trace.events) out << format_event(event) << '\n';
    if (!out) throw Error("I/O error while writing trace");
}

std::string write_trace(const Trace& trace) {
    std::ostringstream out;
    write_trace(trace, out);
    return out.str();
}

void write_trace_file(const Trace& trace, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot create trace file " + path.string());
    write_trace(trace, out);
}

std::vector<std::filesystem::path> list_trace_files(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw Error("not a directory: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == kTraceExtension) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

std::vector<Trace> read_corpus(const std::filesystem::path& dir) {
    std::vector<Trace> corpus;
    for (const auto& path : list_trace_files(dir)) corpus.push_back(read_trace_file(path));
    return corpus;
}

ReplayMode ReplayMode::scaled(double factor) {
    if (!(factor > 0.0)) throw ValidationError("replay scale factor must be positive");
    return ReplayMode{Kind::scaled, factor};
}

ReplayMode ReplayMode::parse(std::string_view text) {
    if (text == "instant") return instant();
    constexpr std::string_view kScaled = "scaled:";
    if (text.substr(0, kScaled.size()) == kScaled) {
        const auto factor = codec::parse_rational(text.substr(kScaled.size()));
        if (factor && *factor > 0.0) return scaled(*factor);
    }
    throw ValidationError("replay mode must be 'instant' or 'scaled:F' with F > 0, got '" + std::string(text) + "'");
}

void replay(const Trace& trace, const ReplayMode& mode, const std::function<void(const Event&)>& sink) {
    if (trace.events.empty()) return;
    using Clock = std::chrono::steady_clock;
    const auto start = Clock::now();
    const auto origin = trace.events.front().timestamp_ms;
    for (const auto& event : trace.events) {
        if (mode.kind == ReplayMode::Kind::scaled) {
            const double offset_ms = static_cast<double>(event.timestamp_ms - origin) * mode.factor;
            std::this_thread::sleep_until(start + std::chrono::duration_cast<Clock::duration>(
                                                      std::chrono::duration<double, std::milli>(offset_ms)));
        }
        sink(event);
    }
}

} // namespace rvmon
