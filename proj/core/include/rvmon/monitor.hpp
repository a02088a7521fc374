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
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "rvmon/event.hpp"
#include "rvmon/rules.hpp"

namespace rvmon {

struct EvidenceEvent {
    EventType type;
    std::int64_t timestamp_ms = 0;
    // "counter:3", "session:u1" or empty.
    std::string key;

    bool operator==(const EvidenceEvent&) const = default;
};

struct Evidence {
    std::vector<EvidenceEvent> observed;
    std::vector<EventType> expected;
    std::optional<std::int64_t> count;
    std::optional<std::int64_t> limit;

    /// Observed and expected types, sorted and de-duplicated.
    std::vector<EventType> types() const;
    /// Compact single-token rendering, e.g. `seen:A@0/counter:0;expect:B`.
    std::string describe() const;

    bool operator==(const Evidence&) const = default;
};

struct Violation {
    enum class Kind { missing_consequent, broken_sequence, threshold_exceeded, flow_imbalance };

    std::string rule_id;
    Kind kind = Kind::missing_consequent;
    // Index of the sequence stage that failed to happen; 0 for other kinds.
    std::size_t stage = 0;
    std::int64_t detected_at_ms = 0;
    Evidence evidence;

    bool operator==(const Violation&) const = default;
};

std::string to_string(Violation::Kind kind);

/// `VIOLATION rule=<id> kind=<kind> at=<ms> evidence=<...>`; broken_sequence kinds carry the stage as `broken_sequence(k)`.
std::string format_violation(const Violation& violation);

/// Online monitor synthesized from a rule set. Time is the event timestamps, never the wall clock:
/// pending windows expire only when feed(), advance_to() or finish() moves the logical clock past them.
///
/// Not thread-safe; one instance serves one stream. Instances may move between threads between calls.
class Monitor {
public:
    /// Throws ValidationError if the rule set does not validate.
    explicit Monitor(RuleSet rules);

    /// Expires windows that closed strictly before `event.timestamp_ms`, then applies the event.
    /// Throws MonotonicityError for a late event and ConfigurationError for a session rule fed an event
    /// without session id; in both cases the state is unchanged.
    std::vector<Violation> feed(const Event& event);

    /// Clock tick without an event (live mode). A tick older than the clock is a no-op.
    std::vector<Violation> advance_to(std::int64_t timestamp_ms);

    /// End of stream: every pending window expires. A second call returns nothing.
    std::vector<Violation> finish();

    std::int64_t clock() const noexcept { return clock_; }
    bool finished() const noexcept { return finished_; }
    std::size_t rule_count() const noexcept { return rules_.rules.size(); }
    /// Open antecedents plus open sequence tokens.
    std::size_t pending_count() const noexcept { return expiry_.size(); }
    const RuleSet& rules() const noexcept { return rules_; }

private:
    enum class Role { follows_antecedent, follows_consequent, sequence_stage, threshold };

    struct Subscription {
        std::size_t rule = 0;
        Role role = Role::threshold;
        std::size_t stage = 0;
    };

    struct ExpiryKey {
        std::int64_t deadline = 0;
        std::size_t rule = 0;
        std::uint64_t seq = 0;

        auto operator<=>(const ExpiryKey&) const = default;
    };

    // Follows rules use stage 0; sequence rules use the stage of the token.
    using QueueId = std::tuple<std::size_t, std::size_t, std::string>;

    struct Pending {
        QueueId queue;
        EvidenceEvent origin;
    };

    struct ThresholdState {
        std::int64_t count = 0;
        bool fired = false;
    };

    void expire_until(std::int64_t clock, bool at_end, std::vector<Violation>& out);
    void process(const Event& event, std::vector<Violation>& out);
    std::string correlation_key(std::size_t rule, const Event& event, std::int64_t auto_counter) const;
    void register_pending(std::size_t rule, std::size_t stage, std::string key, EvidenceEvent origin,
                          std::int64_t timestamp_ms, std::int64_t window_ms);
    std::optional<Pending> discharge(const QueueId& queue);
    void count_threshold(std::size_t rule, const Event& event, std::vector<Violation>& out);

    RuleSet rules_;
    std::unordered_map<std::string, std::vector<Subscription>> subscriptions_;
    std::vector<std::size_t> wildcard_rules_;
    std::unordered_set<std::string> threshold_types_;
    std::vector<ThresholdState> thresholds_;
    std::unordered_map<std::string, std::int64_t> arrivals_;
    std::map<ExpiryKey, Pending> expiry_;
    std::map<QueueId, std::deque<ExpiryKey>> queues_;
    std::uint64_t next_seq_ = 0;
    std::int64_t clock_ = std::numeric_limits<std::int64_t>::min();
    bool finished_ = false;
};

/// Feeds every event of the trace, then finishes.
std::vector<Violation> monitor_trace(const RuleSet& rules, const Trace& trace);

} // namespace rvmon
