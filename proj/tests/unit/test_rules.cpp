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

#include "rvmon/error.hpp"
#include "rvmon/rules.hpp"
#include "support.hpp"

using namespace rvmon;

TEST(RuleValidation, AntecedentEqualsConsequent) {
    RuleSet s{{FollowsRule{"r", EventType{"a_x"}, EventType{"a_x"}, 1000, Correlation::session}}};
    EXPECT_THROW(validate(s), ValidationError);
}

TEST(RuleValidation, DuplicateIds) {
    RuleSet s{{ThresholdRule{"r", EventType{"a_x"}, 1, true}, ThresholdRule{"r", EventType{"b_y"}, 1, true}}};
    EXPECT_THROW(validate(s), ValidationError);
}

TEST(RuleValidation, PollerThresholdIsValid) {
    RuleSet s{{ThresholdRule{"t", EventType{"q-plugin_release_dhcp_port"}, 3, true}}};
    EXPECT_NO_THROW(validate(s));
}

TEST(RuleValidation, OtherInvalidShapes) {
    EXPECT_THROW(validate(RuleSet{{FollowsRule{"r", EventType{"a_x"}, EventType{"b_y"}, 0, Correlation::flow}}}),
                 ValidationError);
    EXPECT_THROW(validate(RuleSet{{SequenceRule{"s", {EventType{"a_x"}}, 10}}}), ValidationError);
    EXPECT_THROW(validate(RuleSet{{SequenceRule{"s", {EventType{"a_x"}, EventType{"b_y"}, EventType{"a_x"}}, 10}}}),
                 ValidationError);
    EXPECT_THROW(validate(RuleSet{{ThresholdRule{"t", EventType{"a_x"}, -1, true}}}), ValidationError);
    EXPECT_THROW(validate(RuleSet{{ThresholdRule{"t", EventType{"a_x"}, 1, true},
                                   ThresholdRule{"u", EventType{"a_x"}, 2, true}}}),
                 ValidationError);
}

TEST(RuleFormat, ThreeRuleRoundTrip) {
    const std::string text = "F1 follows a_x -> b_y within 100 by counter\n"
                             "S1 seq a_x -> b_y -> c_z within 250\n"
                             "T1 threshold q-plugin_release_dhcp_port max 3 once\n";
    const auto s = read_rules(text);
    ASSERT_EQ(s.rules.size(), 3u);
    EXPECT_EQ(write_rules(s), text);
    EXPECT_EQ(read_rules(write_rules(s)), s);
}

TEST(RuleFormat, VolumeAttachmentRules) {
    const auto s = read_rules(
        "# Volume Attachment\n"
        "Rule1 follows compute_reserve_block_device_name -> compute_attach_volume within 5000 by counter\n"
        "Rule2 follows compute_attach_volume -> cinder-volume.localhost.localdomain@lvm_initialize_connection "
        "within 5000 by counter\n"
        "Rule3 seq compute_attach_volume -> cinder-volume.localhost.localdomain@lvm_initialize_connection -> "
        "cinder-volume.localhost.localdomain@lvm_attach_volume within 5000\n");
    ASSERT_EQ(s.rules.size(), 3u);
    EXPECT_NO_THROW(validate(s));
    const auto& r1 = std::get<FollowsRule>(s.rules[0]);
    EXPECT_EQ(r1.antecedent.name, "compute_reserve_block_device_name");
    EXPECT_EQ(r1.correlation, Correlation::counter);
    EXPECT_EQ(std::get<SequenceRule>(s.rules[2]).stages.size(), 3u);
}

TEST(RuleFormat, ParseErrors) {
    EXPECT_THROW(read_rules("x follows a_x -> b_y within 10\n"), ParseError);
    EXPECT_THROW(read_rules("x follows a_x -> b_y within 10 by time\n"), ParseError);
    EXPECT_THROW(read_rules("x seq a_x within 10\n"), Error);
    EXPECT_THROW(read_rules("x threshold a_x max -1\n"), ParseError);
    EXPECT_THROW(read_rules("x frobnicate\n"), ParseError);
    EXPECT_THROW(read_rules("x threshold a_x max 1\nx threshold b_y max 1\n"), ValidationError);
    try {
        read_rules("# c\n\nx threshold a_x max 1 twice\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
}

TEST(RuleFormat, WildcardThreshold) {
    const auto s = read_rules("U1 threshold * max 0 once\n");
    EXPECT_TRUE(std::get<ThresholdRule>(s.rules[0]).wildcard());
}

TEST(RuleFormat, RandomRoundTrip) {
    std::mt19937_64 rng(77);
    for (int i = 0; i < 100; ++i) {
        const auto s = rvmon::testing::random_serializable_rules(rng);
        ASSERT_NO_THROW(validate(s));
        const auto text = write_rules(s);
        ASSERT_EQ(read_rules(text), s) << text;
    }
}

TEST(RuleSetOrder, SortById) {
    RuleSet s{{ThresholdRule{"b", EventType{"a_x"}, 1, true}, ThresholdRule{"a", EventType{"b_y"}, 1, true}}};
    sort_by_id(s);
    EXPECT_EQ(rule_id(s.rules[0]), "a");
}
