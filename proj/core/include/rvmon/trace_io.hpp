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

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "rvmon/event.hpp"

namespace rvmon {

inline constexpr std::string_view kTraceMagic = "#rvtrace";
inline constexpr std::string_view kTraceSchema = "v1";
inline constexpr std::string_view kTraceExtension = ".rvt";

/// Parses a trace file body. Events come back stably sorted by timestamp.
/// Throws ParseError (with line number) or ValidationError.
Trace read_trace(std::istream& in);
Trace read_trace(std::string_view text);
Trace read_trace_file(const std::filesystem::path& path);

void write_trace(const Trace& trace, std::ostream& out);
std::string write_trace(const Trace& trace);
void write_trace_file(const Trace& trace, const std::filesystem::path& path);

/// One event record line without newline, e.g. `ts=5 sender=compute service=attach_volume dur=3`.
std::string format_event(const Event& event);
/// Parses one event record line; `line_no` is used for diagnostics only.
Event parse_event(std::string_view line, std::size_t line_no = 0);

std::string format_label(const TraceLabel& label);

/// Every `*.rvt` file under `dir` (non-recursive), sorted by file name.
std::vector<std::filesystem::path> list_trace_files(const std::filesystem::path& dir);
std::vector<Trace> read_corpus(const std::filesystem::path& dir);

struct ReplayMode {
    enum class Kind { instant, scaled };
    Kind kind = Kind::instant;
    // Wall-clock seconds slept per second of trace time; only used when scaled.
    double factor = 1.0;

    static ReplayMode instant() { return {}; }
    static ReplayMode scaled(double factor);
    /// "instant" or "scaled:F" where F is a positive decimal or p/q.
    static ReplayMode parse(std::string_view text);
};

/// Emits the trace's events in order to `sink`. Scaled mode sleeps in proportion to timestamp gaps;
/// the events themselves are unchanged in either mode.
void replay(const Trace& trace, const ReplayMode& mode, const std::function<void(const Event&)>& sink);

} // namespace rvmon
