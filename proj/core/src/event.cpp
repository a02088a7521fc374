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

#include "rvmon/event.hpp"

#include <algorithm>
#include <unordered_map>

#include "rvmon/error.hpp"

namespace rvmon {

std::string TraceLabel::case_name() const {
    std::string out;
    for (const auto& name : failure_cases) {
        if (!out.empty()) out += ',';
        out += name;
    }
    return out;
}

TraceLabel TraceLabel::faulty_case(std::string failure_case) {
    TraceLabel label;
    label.failure_cases.push_back(std::move(failure_case));
    return label;
}

EventType event_type_of(const Event& event) {
    std::string name;
    name.reserve(event.sender.size() + 1 + event.service.size());
    name += event.sender;
    name += kTypeSeparator;
    name += event.service;
    return EventType{std::move(name)};
}

void validate_event(const Event& event) {
    if (event.sender.empty()) throw ValidationError("event sender is empty");
    if (event.service.empty()) throw ValidationError("event service is empty");
    if (event.sender.find(kTypeSeparator) != std::string::npos) {
        throw ValidationError("event sender '" + event.sender + "' contains the type separator '_'");
    }
    if (event.timestamp_ms < 0) throw ValidationError("negative timestamp");
    if (event.duration_ms < 0) throw ValidationError("negative duration");
    if (event.counter && *event.counter < 0) throw ValidationError("negative counter");
}

void sort_events(std::vector<Event>& events) {
    std::stable_sort(events.begin(), events.end(),
                     [](const Event& a, const Event& b) { return a.timestamp_ms < b.timestamp_ms; });
}

Trace assign_counters(Trace trace) {
    std::unordered_map<std::string, std::int64_t> seen;
    for (auto& event : trace.events) {
        event.counter = seen[event_type_of(event).name]++;
    }
    return trace;
}

} // namespace rvmon
