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

#include <fstream>
#include <sstream>

#include "rvmon/trace_io.hpp"
#include "rvmon_cli/cli.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args, const std::string& input = "") {
    std::istringstream in(input);
    std::ostringstream out, err;
    const int code = rvmon::cli::run(args, in, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir = rvmon::testing::temp_dir(::testing::UnitTest::GetInstance()->current_test_info()->name());
    }
    std::string at(const std::string& name) const { return (dir / name).string(); }
    fs::path dir;
};

} // namespace

TEST_F(CliTest, UsageErrors) {
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"frobnicate"}).code, 2);
    EXPECT_EQ(run({"mine", "--bogus"}).code, 2);
    const auto r = run({"mine", "--corpus", at("missing")});
    EXPECT_EQ(r.code, 2);
    EXPECT_FALSE(r.err.empty());
    EXPECT_EQ(run({"monitor", "--rules", at("missing.rvr")}).code, 2);
}

TEST_F(CliTest, HelpDocumentsFormats) {
    const auto r = run({"monitor", "--help"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("VIOLATION rule=<id>"), std::string::npos);
    EXPECT_NE(r.out.find("#rvtrace v1"), std::string::npos);
}

TEST_F(CliTest, PipelineExitCodes) {
    ASSERT_EQ(run({"generate", "--n", "12", "--seed", "5", "--out", at("ff")}).code, 0);
    EXPECT_EQ(rvmon::list_trace_files(dir / "ff").size(), 12u);
    ASSERT_EQ(run({"mine", "--corpus", at("ff"), "--out", at("r.rvr")}).code, 0);
    EXPECT_FALSE(slurp(dir / "r.rvr").empty());

    const auto good = run({"monitor", "--rules", at("r.rvr"), "--replay", at("ff/trace-0003.rvt")});
    EXPECT_EQ(good.code, 0);
    EXPECT_TRUE(good.out.empty());

    ASSERT_EQ(run({"inject", "--trace", at("ff/trace-0003.rvt"), "--fault", "throw_exception", "--step", "3", "--p-error",
                   "0.24", "--seed", "2", "--out", at("bad.rvt")})
                  .code,
              0);
    const auto bad = run({"monitor", "--rules", at("r.rvr"), "--replay", at("bad.rvt"), "--mode", "scaled:1/100000"});
    EXPECT_EQ(bad.code, 1);
    EXPECT_EQ(bad.out.rfind("VIOLATION rule=", 0), 0u);
}

TEST_F(CliTest, LiveMonitorReadsStdin) {
    std::ofstream(dir / "r.rvr") << "R follows a_x -> b_y within 100 by flow\n";
    const std::string events = "ts=0 sender=a service=x dur=1\nts=50 sender=b service=y dur=1\n";
    EXPECT_EQ(run({"monitor", "--rules", at("r.rvr"), "--live"}, events).code, 0);
    const auto late = run({"monitor", "--rules", at("r.rvr"), "--live"},
                          "ts=0 sender=a service=x dur=1\nts=500 sender=c service=z dur=1\nts=10 sender=b service=y dur=1\n");
    EXPECT_EQ(late.code, 1);
    EXPECT_NE(late.err.find("late event"), std::string::npos);
    EXPECT_NE(late.out.find("kind=missing_consequent at=500"), std::string::npos);
}

TEST_F(CliTest, RerunsAreByteIdentical) {
    for (const std::string run_id : {"1", "2"}) {
        const auto d = at("run" + run_id);
        ASSERT_EQ(run({"--seed", "9", "generate", "--n", "30", "--out", d + "/ff"}).code, 0);
        ASSERT_EQ(run({"mine", "--corpus", d + "/ff", "--out", d + "/r.rvr", "--flag-unknown-events"}).code, 0);
        fs::create_directories(d + "/faulty");
        for (int i = 0; i < 10; ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "trace-%04d", i);
            ASSERT_EQ(run({"inject", "--trace", d + "/ff/" + name + ".rvt", "--fault", i % 2 ? "delay" : "wrong_return_value",
                           "--step", std::to_string(1 + i % 4), "--delay-ms", "90000", "--seed", std::to_string(i),
                           "--out", d + "/faulty/" + name + ".rvt"})
                          .code,
                      0);
        }
        ASSERT_EQ(run({"mix", "--inputs", d + "/ff/trace-0000.rvt", d + "/faulty/trace-0001.rvt", "--seed", "4", "--out",
                       d + "/mix.rvt"})
                      .code,
                  0);
        ASSERT_EQ(run({"evaluate", "--rules", d + "/r.rvr", "--fault-free", d + "/ff", "--faulty", d + "/faulty",
                       "--multiuser", "--reps", "4", "--k-free", "3", "--k-faulty", "1", "--seed", "3", "--out",
                       d + "/report.txt"})
                      .code,
                  0);
    }
    for (const auto& entry : fs::recursive_directory_iterator(at("run1"))) {
        if (!entry.is_regular_file()) continue;
        const auto rel = fs::relative(entry.path(), at("run1"));
        EXPECT_EQ(slurp(entry.path()), slurp(dir / "run2" / rel)) << rel;
    }
    EXPECT_NE(slurp(dir / "run1" / "report.txt.lines").find("TOTAL n_faulty=10"), std::string::npos);
}
