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

#include <gtest/gtest.h>

#include <random>
#include <set>

#include "rvmon/error.hpp"
#include "rvmon/miner.hpp"
#include "rvmon/monitor.hpp"
#include "support.hpp"

using namespace rvmon;
using rvmon::testing::make_trace;

namespace {

const std::string kReserve = "compute_reserve_block_device_name";
const std::string kAttach = "compute_attach_volume";
const std::string kInit = "cinder-volume.localhost.localdomain@lvm_initialize_connection";
const std::string kLvmAttach = "cinder-volume.localhost.localdomain@lvm_attach_volume";

std::vector<Trace> volume_attach_corpus() {
    std::vector<Trace> corpus;
    for (std::int64_t i = 0; i < 5; ++i) {
        corpus.push_back(make_trace({{"nova-api_volume_attach", 0},
                                     {kReserve, 100 + i},
                                     {kAttach, 300 + 10 * i},
                                     {kInit, 450 + 20 * i},
                                     {kLvmAttach, 600 + 5 * i}},
                                    "v" + std::to_string(i)));
    }
    return corpus;
}

std::set<std::pair<std::string, std::string>> pairs_of(const std::vector<FollowsRule>& rules) {
    std::set<std::pair<std::string, std::string>> out;
    for (const auto& r : rules) out.emplace(r.antecedent.name, r.consequent.name);
    return out;
}

const FollowsRule* find_pair(const std::vector<FollowsRule>& rules, const std::string& a, const std::string& b) {
    for (const auto& r : rules) {
        if (r.antecedent.name == a && r.consequent.name == b) return &r;
    }
    return nullptr;
}

} // namespace

TEST(MineFollows, ReserveFollowedByAttach) {
    const auto rules = mine_follows(volume_attach_corpus());
    const auto* r1 = find_pair(rules, kReserve, kAttach);
    ASSERT_NE(r1, nullptr);
    EXPECT_EQ(r1->correlation, Correlation::counter);
    // Largest gap 340 - 104 = 236; safety factor 2.
    EXPECT_EQ(r1->window_ms, 472);
    EXPECT_EQ(find_pair(rules, kAttach, kReserve), nullptr);
}

TEST(MineFollows, CountMismatchDropsPair) {
    auto corpus = volume_attach_corpus();
    corpus[2].events.insert(corpus[2].events.begin() + 1, rvmon::testing::make_event(kReserve, 50));
    const auto rules = mine_follows(corpus);
    EXPECT_EQ(find_pair(rules, kReserve, kAttach), nullptr);
    EXPECT_NE(find_pair(rules, kAttach, kInit), nullptr);
}

TEST(MineFollows, WindowIsAtLeastOne) {
    const std::vector<Trace> corpus{make_trace({{"a_x", 5}, {"b_y", 5}})};
    const auto rules = mine_follows(corpus);
    ASSERT_EQ(rules.size(), 1u);
    EXPECT_EQ(rules[0].window_ms, 1);
    MiningConfig c;
    c.window_safety_factor = 1.5;
    const std::vector<Trace> odd{make_trace({{"a_x", 0}, {"b_y", 3}})};
    EXPECT_EQ(mine_follows(odd, c)[0].window_ms, 5);
}

TEST(MineFollows, RejectsBadInput) {
    EXPECT_THROW(mine_follows({}), ValidationError);
    auto faulty = make_trace({{"a_x", 0}});
    faulty.label = TraceLabel::faulty_case("X");
    EXPECT_THROW(mine_follows({faulty}), ValidationError);
    MiningConfig c;
    c.window_safety_factor = 1.0;
    EXPECT_THROW(mine_follows({make_trace({{"a_x", 0}})}, c), ValidationError);
}

TEST(MineFollows, MatchesBruteForceOracle) {
    std::mt19937_64 rng(404);
    for (int round = 0; round < 60; ++round) {
        const auto corpus = rvmon::testing::random_corpus(rng, 1 + round % 6, 6);
        std::set<std::string> types;
        for (const auto& t : corpus) {
            ASSERT_LE(t.events.size(), 30u);
            for (const auto& e : t.events) types.insert(event_type_of(e).name);
        }
        std::set<std::pair<std::string, std::string>> expected;
        for (const auto& a : types) {
            for (const auto& b : types) {
                if (a == b) continue;
                bool all = true;
                for (const auto& t : corpus) all = all && rvmon::testing::pair_holds_bruteforce(t, {a}, {b});
                if (all) expected.emplace(a, b);
            }
        }
        ASSERT_EQ(pairs_of(mine_follows(corpus)), expected) << "round " << round;
    }
}

TEST(MineSequences, VolumeAttachChain) {
    const auto corpus = volume_attach_corpus();
    const auto seqs = mine_sequences(corpus, mine_follows(corpus));
    ASSERT_EQ(seqs.size(), 1u);
    const std::vector<EventType> want{{"nova-api_volume_attach"}, {kReserve}, {kAttach}, {kInit}, {kLvmAttach}};
    EXPECT_EQ(seqs[0].stages, want);
}

TEST(MineSequences, NoChainablePairs) {
    const std::vector<Trace> corpus{make_trace({{"a_x", 0}, {"b_y", 1}}), make_trace({{"b_y", 0}, {"a_x", 1}})};
    EXPECT_TRUE(mine_sequences(corpus, mine_follows(corpus)).empty());
}

TEST(MineSequences, VerifiedByBruteForceChains) {
    std::mt19937_64 rng(505);
    std::size_t mined = 0;
    for (int round = 0; round < 60; ++round) {
        const auto corpus = rvmon::testing::random_corpus(rng, 1 + round % 5, 5);
        for (const auto& s : mine_sequences(corpus, mine_follows(corpus))) {
            ++mined;
            EXPECT_GE(s.stages.size(), 3u);
            for (const auto& t : corpus) EXPECT_TRUE(rvmon::testing::chain_holds_bruteforce(t, s.stages));
        }
    }
    EXPECT_GT(mined, 0u);
}

TEST(MineThresholds, MaxOverTraces) {
    const std::string poller = "q-plugin_release_dhcp_port";
    std::vector<Trace> corpus;
    for (int n : {1, 3, 2}) {
        Trace t;
        for (int i = 0; i < n; ++i) t.events.push_back(rvmon::testing::make_event(poller, i));
        corpus.push_back(t);
    }
    const auto rules = mine_thresholds(corpus);
    ASSERT_EQ(rules.size(), 1u);
    EXPECT_EQ(rules[0].event_type.name, poller);
    EXPECT_EQ(rules[0].max_count, 3);
    EXPECT_TRUE(rules[0].one_shot);
}

TEST(MineThresholds, SingleTraceAndAbsentTypes) {
    const std::vector<Trace> corpus{make_trace({{"a_x", 0}, {"a_x", 1}, {"b_y", 2}})};
    const auto rules = mine_thresholds(corpus);
    ASSERT_EQ(rules.size(), 2u);
    EXPECT_EQ(rules[0].max_count, 2);
    EXPECT_EQ(rules[1].max_count, 1);
    MiningConfig c;
    c.flag_unknown_events = true;
    const auto flagged = mine_thresholds(corpus, c);
    ASSERT_EQ(flagged.size(), 3u);
    EXPECT_TRUE(flagged.back().wildcard());
    EXPECT_EQ(flagged.back().max_count, 0);
}

TEST(MineRules, DeterministicAndSound) {
    std::mt19937_64 rng(606);
    for (int round = 0; round < 30; ++round) {
        const auto corpus = rvmon::testing::random_corpus(rng, 10);
        MiningConfig c;
        c.flag_unknown_events = round % 2 == 0;
        const auto rules = mine_rules(corpus, c);
        EXPECT_EQ(rules, mine_rules(corpus, c));
        for (const auto& t : corpus) EXPECT_TRUE(monitor_trace(rules, t).empty()) << "round " << round;
    }
}
