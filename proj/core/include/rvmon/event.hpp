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

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rvmon {

/// Name shared by all events of one (sender, service) pair.
struct EventType {
    std::string name;

    auto operator<=>(const EventType&) const = default;
};

/// Joins sender and service. Senders never contain it, so the first occurrence splits a name back.
inline constexpr char kTypeSeparator = '_';

/// One traced communication API call.
struct Event {
    std::int64_t timestamp_ms = 0;
    std::string sender;
    std::string service;
    std::int64_t duration_ms = 0;
    std::optional<std::int64_t> counter;
    std::optional<std::string> session_id;
    // Baseline signal only; no monitoring rule reads it.
    bool api_error = false;

    bool operator==(const Event&) const = default;
};

/// Ground-truth sidecar. Fault-free iff `failure_cases` is empty. Never read by monitoring.
struct TraceLabel {
    std::vector<std::string> failure_cases;
    std::vector<std::string> fault_types;
    // Event types the injection touched; used to attribute violations in mixed traces.
    std::vector<std::string> affected_types;

    bool faulty() const noexcept { return !failure_cases.empty(); }
    std::string case_name() const;

    static TraceLabel fault_free() { return {}; }
    static TraceLabel faulty_case(std::string failure_case);

    bool operator==(const TraceLabel&) const = default;
};

struct Trace {
    std::string id;
    TraceLabel label;
    std::vector<Event> events;

    bool operator==(const Trace&) const = default;
};

EventType event_type_of(const Event& event);

/// Throws ValidationError when the event breaks a field invariant.
void validate_event(const Event& event);

/// Stable sort by timestamp; ties keep their current order.
void sort_events(std::vector<Event>& events);

/// counter := number of earlier events of the same type (0-based), overwriting any existing value.
Trace assign_counters(Trace trace);

} // namespace rvmon
