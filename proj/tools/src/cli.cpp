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

#include "rvmon_cli/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <istream>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "rvmon/codec.hpp"
#include "rvmon/error.hpp"
#include "rvmon/evaluator.hpp"
#include "rvmon/miner.hpp"
#include "rvmon/monitor.hpp"
#include "rvmon/rules.hpp"
#include "rvmon/trace_io.hpp"
#include "rvmon/workload.hpp"

namespace rvmon::cli {

namespace {

namespace fs = std::filesystem;

constexpr const char* kTraceFormat = R"(Trace format (.rvt), one record per line:
  #rvtrace v1 label=<fault_free|faulty:CASE[,CASE]> id=<id> [fault=<t>[,<t>]] [affects=<type>[,<type>]]
  ts=<ms> sender=<s> service=<s> dur=<ms> [counter=<n>] [session=<s>] [api_error=1]
Values are percent-encoded (%, space, comma, '=', control bytes). Lines starting with # are comments.
)";

constexpr const char* kRuleFormat = R"(Rule format (.rvr), one rule per line, # starts a comment:
  <id> follows <A> -> <B> within <ms> by session|counter|flow
  <id> seq <T1> -> <T2> -> ... within <ms>
  <id> threshold <T> max <n> [once]
Event types are <sender>_<service>; `threshold * ...` counts event types no other threshold names.
)";

constexpr const char* kTemplateFormat = R"(Template format (.rvw), # starts a comment:
  seed <n>
  step <name> [perror <p>]
  event <sender> <service> gap <lo> <hi> dur <lo> <hi>
  poller <sender> <service> period <lo> <hi> jitter <ms> count <min> <max> dur <lo> <hi> covers <i>[,<j>...]
`event` lines belong to the preceding step. Names are percent-encoded.
)";

constexpr const char* kViolationFormat = R"(Violations are written to standard output, one per line:
  VIOLATION rule=<id> kind=<missing_consequent|flow_imbalance|broken_sequence(k)|threshold_exceeded> at=<ms> evidence=<enc>
Exit status: 0 no violations, 1 violations found, 2 error.
)";

struct Options {
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool verbose = false;

    std::string template_path;
    std::size_t n = 100;
    std::string out;

    std::string corpus;
    double safety_factor = 2.0;
    bool flag_unknown = false;

    std::string trace;
    std::string fault;
    std::size_t step = 0;
    std::optional<double> p_error;
    std::int64_t delay_ms = 1000;
    std::string storm;
    std::int64_t storm_spacing = 10;

    std::vector<std::string> inputs;

    std::string rules;
    bool live = false;
    std::string replay;
    std::string mode = "instant";
    std::int64_t tick_ms = 500;
    std::int64_t grace_ms = 1000;

    std::string fault_free;
    std::string faulty;
    bool multiuser = false;
    std::size_t reps = 30;
    std::size_t k_free = 5;
    std::size_t k_faulty = 5;
};

class Output {
public:
    Output(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
        if (path.empty()) return;
        if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
        file_.open(path, std::ios::binary);
        if (!file_) throw Error("cannot open '" + path + "' for writing");
        stream_ = &file_;
    }
    std::ostream& stream() { return *stream_; }

private:
    std::ofstream file_;
    std::ostream* stream_;
};

WorkloadTemplate load_template(const std::string& path) {
    if (path.empty() || path == "default") return default_template();
    return read_template_file(path);
}

StormSpec parse_storm(const std::string& text, std::int64_t spacing) {
    const auto colon = text.find(':');
    const auto lo = codec::parse_non_negative(std::string_view(text).substr(0, colon));
    const auto hi = colon == std::string::npos ? lo : codec::parse_non_negative(std::string_view(text).substr(colon + 1));
    if (!lo || !hi || *lo < 1 || *hi < *lo) throw ValidationError("--storm expects MIN or MIN:MAX with 1 <= MIN <= MAX");
    return StormSpec{{*lo, *hi}, spacing};
}

int cmd_template(const Options& o, std::ostream& out) {
    Output sink(o.out, out);
    write_template(default_template(), sink.stream());
    return kExitOk;
}

int cmd_generate(const Options& o, std::ostream& err) {
    auto workload = load_template(o.template_path);
    if (o.seed_set) workload.seed = o.seed;
    const auto traces = generate(workload, o.n);
    fs::create_directories(o.out);
    for (const auto& trace : traces) write_trace_file(trace, fs::path(o.out) / (trace.id + ".rvt"));
    if (o.verbose) err << "generated " << traces.size() << " traces in " << o.out << '\n';
    return kExitOk;
}

int cmd_mine(const Options& o, std::ostream& out, std::ostream& err) {
    const auto corpus = read_corpus(o.corpus);
    MiningConfig config;
    config.window_safety_factor = o.safety_factor;
    config.flag_unknown_events = o.flag_unknown;
    const auto rules = mine_rules(corpus, config);
    Output sink(o.out, out);
    write_rules(rules, sink.stream());
    if (o.verbose) err << "mined " << rules.rules.size() << " rules from " << corpus.size() << " traces\n";
    return kExitOk;
}

int cmd_inject(const Options& o, std::ostream& out, std::ostream& err) {
    const auto trace = read_trace_file(o.trace);
    FaultSpec spec;
    spec.type = parse_fault_type(o.fault);
    spec.target_step = o.step;
    spec.delay_ms = o.delay_ms;
    spec.p_error = o.p_error;
    spec.seed = o.seed;
    if (!o.storm.empty()) spec.storm = parse_storm(o.storm, o.storm_spacing);
    const auto faulty = inject(trace, spec, load_template(o.template_path));
    Output sink(o.out, out);
    write_trace(faulty, sink.stream());
    if (o.verbose) err << "injected " << to_string(spec.type) << " into step " << o.step << '\n';
    return kExitOk;
}

int cmd_mix(const Options& o, std::ostream& out) {
    std::vector<Trace> traces;
    for (const auto& path : o.inputs) traces.push_back(read_trace_file(path));
    Output sink(o.out, out);
    write_trace(mix(traces, o.seed), sink.stream());
    return kExitOk;
}

int cmd_replay(const Options& o, const RuleSet& rules, std::ostream& out, std::ostream& err) {
    const auto trace = read_trace_file(o.replay);
    Monitor monitor(rules);
    std::size_t found = 0;
    const auto emit = [&](const std::vector<Violation>& batch) {
        for (const auto& v : batch) out << format_violation(v) << '\n';
        found += batch.size();
    };
    replay(trace, ReplayMode::parse(o.mode), [&](const Event& e) { emit(monitor.feed(e)); });
    emit(monitor.finish());
    out.flush();
    if (o.verbose) err << "replayed " << trace.events.size() << " events, " << found << " violations\n";
    return found == 0 ? kExitOk : kExitViolations;
}

int cmd_live(const Options& o, const RuleSet& rules, std::istream& in, std::ostream& out, std::ostream& err) {
    using Clock = std::chrono::steady_clock;
    Monitor monitor(rules);
    std::mutex mutex;
    std::condition_variable stop_cv;
    bool stopping = false;
    std::optional<std::pair<std::int64_t, Clock::time_point>> origin;
    std::size_t found = 0;

    const auto emit = [&](const std::vector<Violation>& batch) {
        for (const auto& v : batch) out << format_violation(v) << '\n';
        if (!batch.empty()) out.flush();
        found += batch.size();
    };

    std::thread ticker([&] {
        std::unique_lock lock(mutex);
        while (!stop_cv.wait_for(lock, std::chrono::milliseconds(o.tick_ms), [&] { return stopping; })) {
            if (!origin) continue;
            const auto elapsed =
                std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - origin->second).count();
            const std::int64_t target = origin->first + elapsed - o.grace_ms;
            if (target > monitor.clock()) emit(monitor.advance_to(target));
        }
    });

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        try {
            const Event event = parse_event(line, line_no);
            std::lock_guard lock(mutex);
            if (!origin) origin.emplace(event.timestamp_ms, Clock::now());
            emit(monitor.feed(event));
        } catch (const MonotonicityError& e) {
            err << "warning: skipping late event on line " << line_no << ": " << e.what() << '\n';
        } catch (const ParseError& e) {
            err << "warning: skipping malformed line " << line_no << ": " << e.detail() << '\n';
        }
    }
    {
        std::lock_guard lock(mutex);
        stopping = true;
    }
    stop_cv.notify_all();
    ticker.join();
    emit(monitor.finish());
    out.flush();
    return found == 0 ? kExitOk : kExitViolations;
}

int cmd_evaluate(const Options& o, std::ostream& out, std::ostream& err) {
    const auto rules = read_rules_file(o.rules);
    const auto fault_free = read_corpus(o.fault_free);
    const auto faulty = read_corpus(o.faulty);
    auto report = run_campaign(fault_free, faulty, rules);
    if (o.multiuser) {
        MultiUserConfig config;
        config.repetitions = o.reps;
        config.k_free = o.k_free;
        config.k_faulty = o.k_faulty;
        config.seed = o.seed;
        report.multiuser = run_multiuser(fault_free, faulty, rules, config);
    }
    if (o.out.empty()) {
        out << format_report_table(report) << '\n' << format_report_lines(report);
    } else {
        Output table(o.out, out);
        table.stream() << format_report_table(report);
        Output lines(o.out + ".lines", out);
        lines.stream() << format_report_lines(report);
    }
    if (o.verbose) {
        err << "evaluated " << fault_free.size() << " fault-free and " << faulty.size() << " faulty traces\n";
    }
    return kExitOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Runtime verification monitor for cloud control-plane event traces", "rvmon"};
    app.require_subcommand(1, 1);
    app.fallthrough();
    app.add_option("--seed", o.seed, "Seed for every randomized step")->each([&](const std::string&) {
        o.seed_set = true;
    });
    app.add_flag("--verbose", o.verbose, "Progress diagnostics on standard error");

    auto* tmpl = app.add_subcommand("template", "Print the built-in workload template");
    tmpl->add_option("--out", o.out, "Output file (default: standard output)");
    tmpl->footer(kTemplateFormat);

    auto* gen = app.add_subcommand("generate", "Generate fault-free traces from a workload template");
    gen->add_option("--template", o.template_path, "Template file, or 'default'")->default_str("default");
    gen->add_option("--n", o.n, "Number of traces")->check(CLI::PositiveNumber);
    gen->add_option("--out", o.out, "Output directory")->required();
    gen->footer(std::string(kTemplateFormat) + kTraceFormat);

    auto* mine = app.add_subcommand("mine", "Mine rules from a fault-free corpus");
    mine->add_option("--corpus", o.corpus, "Directory of .rvt traces")->required()->check(CLI::ExistingDirectory);
    mine->add_option("--out", o.out, "Rule file (default: standard output)");
    mine->add_option("--safety-factor", o.safety_factor, "Window = ceil(largest gap * factor), factor > 1");
    mine->add_flag("--flag-unknown-events", o.flag_unknown, "Alert on event types never seen fault-free");
    mine->footer(std::string(kTraceFormat) + kRuleFormat);

    auto* inj = app.add_subcommand("inject", "Inject a fault into a fault-free trace");
    inj->add_option("--trace", o.trace, "Fault-free trace")->required()->check(CLI::ExistingFile);
    inj->add_option("--fault", o.fault, "throw_exception|wrong_return_value|wrong_parameter_value|delay")->required();
    inj->add_option("--step", o.step, "Target workload step, 0-based")->required();
    inj->add_option("--p-error", o.p_error, "Probability the fault surfaces as an API error")
        ->check(CLI::Range(0.0, 1.0));
    inj->add_option("--delay-ms", o.delay_ms, "Delay for delay faults")->check(CLI::NonNegativeNumber);
    inj->add_option("--storm", o.storm, "Add MIN[:MAX] extra polls of the step's covering poller");
    inj->add_option("--storm-spacing-ms", o.storm_spacing, "Spacing of storm events")->check(CLI::PositiveNumber);
    inj->add_option("--template", o.template_path, "Template the trace was generated from")->default_str("default");
    inj->add_option("--out", o.out, "Output trace (default: standard output)");
    inj->footer(kTraceFormat);

    auto* mx = app.add_subcommand("mix", "Interleave traces into one multi-user trace");
    mx->add_option("--inputs", o.inputs, "Input traces")->required()->check(CLI::ExistingFile);
    mx->add_option("--out", o.out, "Output trace (default: standard output)");
    mx->footer(kTraceFormat);

    auto* mon = app.add_subcommand("monitor", "Check events against rules");
    mon->add_option("--rules", o.rules, "Rule file")->required()->check(CLI::ExistingFile);
    auto* live = mon->add_flag("--live", o.live, "Read event lines from standard input");
    auto* rep = mon->add_option("--replay", o.replay, "Trace to replay")->check(CLI::ExistingFile);
    live->excludes(rep);
    mon->add_option("--mode", o.mode, "instant or scaled:F (F wall seconds per trace second)");
    mon->add_option("--tick-ms", o.tick_ms, "Live mode: wall-clock tick period")->check(CLI::PositiveNumber);
    mon->add_option("--grace-ms", o.grace_ms, "Live mode: lag allowed before ticks advance the clock")
        ->check(CLI::NonNegativeNumber);
    mon->footer(std::string(kRuleFormat) + kTraceFormat + kViolationFormat);

    auto* ev = app.add_subcommand("evaluate", "Failure detection coverage of rules over labeled corpora");
    ev->add_option("--rules", o.rules, "Rule file")->required()->check(CLI::ExistingFile);
    ev->add_option("--fault-free", o.fault_free, "Fault-free corpus")->required()->check(CLI::ExistingDirectory);
    ev->add_option("--faulty", o.faulty, "Faulty corpus")->required()->check(CLI::ExistingDirectory);
    ev->add_flag("--multiuser", o.multiuser, "Also run the multi-user analysis");
    ev->add_option("--reps", o.reps, "Multi-user repetitions")->check(CLI::PositiveNumber);
    ev->add_option("--k-free", o.k_free, "Fault-free traces per mix");
    ev->add_option("--k-faulty", o.k_faulty, "Faulty traces per mix")->check(CLI::PositiveNumber);
    ev->add_option("--out", o.out, "Report path; records go to <out>.lines (default: both to standard output)");
    ev->footer(
        "Report: aligned table, then records\n"
        "  CASE name=<enc> n_faulty=<n> rv_detected=<n> baseline_detected=<n> rv_fdc=<pct> baseline_fdc=<pct>\n"
        "  TOTAL ...  FALSE_ALARMS fault_free=<n> flagged=<n>  MULTIUSER name=<enc> mean=<pct> std=<pct> reps=<n>\n");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitError;
    }

    try {
        if (mon->parsed() && !o.live && o.replay.empty()) throw ValidationError("monitor needs --live or --replay");
        if (tmpl->parsed()) return cmd_template(o, out);
        if (gen->parsed()) return cmd_generate(o, err);
        if (mine->parsed()) return cmd_mine(o, out, err);
        if (inj->parsed()) return cmd_inject(o, out, err);
        if (mx->parsed()) return cmd_mix(o, out);
        if (mon->parsed()) {
            const auto rules = read_rules_file(o.rules);
            return o.live ? cmd_live(o, rules, in, out, err) : cmd_replay(o, rules, out, err);
        }
        return cmd_evaluate(o, out, err);
    } catch (const std::exception& e) {
        err << "rvmon: " << e.what() << '\n';
        return kExitError;
    }
}

} // namespace rvmon::cli
