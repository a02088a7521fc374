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

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rvmon/event.hpp"

namespace rvmon {

/// Closed integer range sampled uniformly.
struct UniformRange {
    std::int64_t lo = 0;
    std::int64_t hi = 0;

    bool operator==(const UniformRange&) const = default;
};

struct StepEvent {
    std::string sender;
    std::string service;
    // Time since the previous emitted step event (or trace start).
    UniformRange gap_ms;
    UniformRange duration_ms;

    bool operator==(const StepEvent&) const = default;
};

/// One workload operation; its name doubles as the failure case of faults injected into it.
struct WorkloadStep {
    std::string name;
    std::vector<StepEvent> events;
    // Default probability that a fault in this step surfaces as an API error.
    double p_error = 0.0;

    bool operator==(const WorkloadStep&) const = default;
};

/// Periodic status poll emitted asynchronously while the covered steps run.
struct AsyncPoller {
    std::string sender;
    std::string service;
    UniformRange period_ms;
    std::int64_t jitter_ms = 0;
    UniformRange count;
    UniformRange duration_ms;
    std::vector<std::size_t> covers;

    bool operator==(const AsyncPoller&) const = default;
};

struct WorkloadTemplate {
    std::vector<WorkloadStep> steps;
    std::vector<AsyncPoller> pollers;
    std::uint64_t seed = 0;

    bool operator==(const WorkloadTemplate&) const = default;
};

/// Throws ValidationError.
void validate(const WorkloadTemplate& workload);

/// Cloud control-plane workload: key pair and security group, instance creation, volume creation and
/// attachment, network setup with floating IP (SSH Connection), reboot, volume deletion, teardown.
WorkloadTemplate default_template();

/// Line format, `#` comments:
///   seed <n>
///   step <name> [perror <p>]
///   event <sender> <service> gap <lo> <hi> dur <lo> <hi>
///   poller <sender> <service> period <lo> <hi> jitter <ms> count <min> <max> dur <lo> <hi> covers <i>[,<j>...]
/// `event` lines belong to the preceding `step`. Names are percent-encoded.
WorkloadTemplate read_template(std::istream& in);
WorkloadTemplate read_template(std::string_view text);
WorkloadTemplate read_template_file(const std::string& path);
void write_template(const WorkloadTemplate& workload, std::ostream& out);
std::string write_template(const WorkloadTemplate& workload);

/// n fault-free traces with ids `trace-0000`...; deterministic in (template, n).
std::vector<Trace> generate(const WorkloadTemplate& workload, std::size_t n);

enum class FaultType { throw_exception, wrong_return_value, wrong_parameter_value, delay };

std::string_view to_string(FaultType type);
FaultType parse_fault_type(std::string_view text);

/// Replicates the covering poller's event type `count` times, `spacing_ms` apart.
struct StormSpec {
    UniformRange count;
    std::int64_t spacing_ms = 10;
};

struct FaultSpec {
    FaultType type = FaultType::throw_exception;
    std::size_t target_step = 0;
    std::int64_t delay_ms = 0;
    // Overrides the step's default error visibility when set.
    std::optional<double> p_error;
    std::uint64_t seed = 0;
    std::optional<StormSpec> storm;
};

/// Trace positions of every step's events, found by matching each step's event types as a subsequence
/// in step order. Throws ValidationError when the trace does not contain the template's steps.
std::vector<std::vector<std::size_t>> locate_steps(const Trace& trace, const WorkloadTemplate& workload);

/// Faulty copy of a fault-free trace, labeled with the target step's name as failure case.
Trace inject(const Trace& trace, const FaultSpec& spec, const WorkloadTemplate& workload);

/// Re-bases every input to start at 0 and interleaves them by timestamp; ties between inputs are broken
/// by `seed`, and each input's relative order is kept.
Trace mix(const std::vector<Trace>& traces, std::uint64_t seed);

} // namespace rvmon
