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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "rvmon/event.hpp"
#include "rvmon/monitor.hpp"
#include "rvmon/rules.hpp"

namespace rvmon {

/// Non-incremental verdicts from maximum bipartite matchings over the whole trace. Reference oracle
/// for Monitor: the (rule, kind, stage) multiset matches what the monitor reports after finish().
/// Violations carry detected_at = last timestamp of the trace.
std::vector<Violation> offline_check(const Trace& trace, const RuleSet& rules);

using ViolationSignature = std::tuple<std::string, Violation::Kind, std::size_t>;

std::map<ViolationSignature, std::size_t> signature_multiset(const std::vector<Violation>& violations);

struct Detection {
    TraceLabel label;
    bool detected = false;
};

/// 100 * detected faulty / faulty. Throws ValidationError when no entry is faulty.
double fdc(const std::vector<Detection>& results);

/// Fault-free entries that were flagged.
std::size_t false_alarms(const std::vector<Detection>& results);

struct MeanStd {
    double mean = 0.0;
    // Population standard deviation (divisor n).
    double std = 0.0;
};

MeanStd mean_std(std::span<const double> values);

struct CaseStats {
    std::size_t n_faulty = 0;
    std::size_t rv_detected = 0;
    std::size_t baseline_detected = 0;
    double rv_fdc = 0.0;
    double baseline_fdc = 0.0;

    bool operator==(const CaseStats&) const = default;
};

struct MultiUserStats {
    double mean_fdc = 0.0;
    double std_fdc = 0.0;
    std::size_t repetitions = 0;
    std::vector<double> per_repetition;

    bool operator==(const MultiUserStats&) const = default;
};

struct CampaignReport {
    std::map<std::string, CaseStats> per_case;
    CaseStats totals;
    std::size_t n_fault_free = 0;
    std::size_t false_alarms = 0;
    std::optional<std::map<std::string, MultiUserStats>> multiuser;

    bool operator==(const CampaignReport&) const = default;
};

/// RV detection = at least one violation; baseline detection = at least one event with api_error.
CampaignReport run_campaign(const std::vector<Trace>& fault_free, const std::vector<Trace>& faulty,
                            const RuleSet& rules);

struct MultiUserConfig {
    std::size_t repetitions = 30;
    std::size_t k_free = 5;
    std::size_t k_faulty = 5;
    std::uint64_t seed = 0;
};

/// Per failure case: `repetitions` mixes of k_free fault-free and k_faulty faulty traces of that case.
/// A faulty constituent counts as detected when some violation's evidence types overlap its affected
/// types. The map carries an extra "Total" entry pooling every repetition.
std::map<std::string, MultiUserStats> run_multiuser(const std::vector<Trace>& fault_free,
                                                    const std::vector<Trace>& faulty, const RuleSet& rules,
                                                    const MultiUserConfig& config = {});

inline constexpr std::string_view kTotalRow = "Total";

/// Aligned tables: per-case FDC (baseline vs RV) and, when present, multi-user mean ± std.
std::string format_report_table(const CampaignReport& report);

/// Machine-readable records: CASE, TOTAL, FALSE_ALARMS, MULTIUSER lines.
std::string format_report_lines(const CampaignReport& report);

} // namespace rvmon
