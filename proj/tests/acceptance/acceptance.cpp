// Acceptance checks, one PASS/FAIL line per criterion. Exit status is the number of failures.

#include "support.hpp"

#include "vulnval/cli.hpp"
#include "vulnval/errors.hpp"
#include "vulnval/llm_stub.hpp"
#include "vulnval/metrics.hpp"
#include "vulnval/poc.hpp"
#include "vulnval/taxonomy.hpp"
#include "vulnval/util.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

using namespace vulnval;
using namespace vvtest;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

// Collected across every engine run made by this binary, for the trace and leakage properties.
struct RunLog {
    std::string label;
    std::size_t env_interactions = 0;
    std::size_t trace_interactions = 0;
    std::vector<std::string> leaks;
};
std::vector<RunLog> g_runs;

void log_run(const std::string& label, const FixtureTarget& fixture, const InstrumentedRun& run) {
    g_runs.push_back({label, run.env_interactions, trace_interactions(run.result),
                      leaked_secrets(fixture.manifest(), run.result)});
}

std::string fmt(double v, int digits = 4) {
    std::ostringstream s;
    s.precision(digits);
    s << std::fixed << v;
    return s.str();
}

double se_oracle(double sr, double avg_tca, int max_attempts) {
    return sr / std::exp(std::log(avg_tca) * (avg_tca - 1.0) / (max_attempts - 1));
}

std::vector<RunRecord> synthetic_set(int targets, const std::vector<int>& tcas) {
    std::vector<RunRecord> out;
    for (int i = 0; i < targets; ++i) {
        std::optional<int> tca;
        if (i < static_cast<int>(tcas.size())) tca = tcas[i];
        out.push_back(record("t" + std::to_string(i), 1, tca));
    }
    return out;
}

Outcome c1_se_rows() {
    struct Row {
        double sr, avg, se;
        std::vector<int> tcas;
    };
    // 40 targets each; success TCA multisets realize the published SR and AvgTCA.
    const std::vector<Row> rows{{0.30, 1.67, 0.28, {1, 1, 1, 1, 1, 1, 1, 2, 2, 3, 3, 3}},
                                {0.175, 1.00, 0.18, {1, 1, 1, 1, 1, 1, 1}},
                                {0.10, 2.00, 0.08, {2, 2, 2, 2}}};
    // Real-valued gaps sit exactly at the tolerance for the middle row.
    const double tol = 0.005 + 1e-9;
    std::string detail;
    bool ok = true;
    for (const auto& row : rows) {
        auto set = synthetic_set(40, row.tcas);
        auto m = compute_metrics(set, 5);
        const bool row_ok = std::abs(m.sr - row.sr) < 1e-12 && m.avg_tca && std::abs(*m.avg_tca - row.avg) <= 0.005 &&
                            std::abs(m.se - row.se) <= tol &&
                            std::abs(success_efficiency(row.sr, row.avg, 5) - row.se) <= tol &&
                            std::abs(m.se - se_oracle(m.sr, *m.avg_tca, 5)) < 1e-12;
        ok = ok && row_ok;
        detail += "(" + fmt(row.sr, 3) + ", " + fmt(row.avg, 2) + ")->" + fmt(m.se) + " ";
    }
    return {ok, detail};
}

Outcome c2_success_at_k() {
    auto records = read_records(data_file("records_40x5.ndjson"));
    const double s1 = success_at_k(records, 1);
    const double s5 = success_at_k(records, 5);
    return {s1 == 0.25 && s5 == 0.30, "Success@1 " + fmt(s1, 2) + ", Success@5 " + fmt(s5, 2)};
}

Outcome c3_distribution() {
    auto annotations = read_annotations(data_file("annotations_25.ndjson"));
    auto d = failure_distribution(annotations);
    auto pct = [&](int n) { return std::round(d.share(n) * 1000.0) / 10.0; };
    const double s = pct(d.agent_counts["strategist"]);
    const double e = pct(d.agent_counts["explorer"]);
    const double x = pct(d.agent_counts["exploiter"]);
    const double sem = pct(d.primary_counts["vulnerability_semantics_misread"]);
    auto table = format_distribution(d);
    const bool printed = table.find("76.0%") != std::string::npos && table.find("8.0%") != std::string::npos &&
                         table.find("16.0%") != std::string::npos && table.find("60.0%") != std::string::npos;
    return {d.total == 25 && s == 76.0 && e == 8.0 && x == 16.0 && sem == 60.0 && printed,
            fmt(s, 1) + "% / " + fmt(e, 1) + "% / " + fmt(x, 1) + "%, semantics misread " + fmt(sem, 1) + "%"};
}

Outcome c4_regrole() {
    auto fixture = start(FixtureName::regrole);
    auto run = run_cassette(*fixture, "regrole");
    log_run("regrole", *fixture, run);
    const auto& r = run.result;
    const bool loops = r.record.success && r.record.tca == 2 && r.verdicts.size() == 2 &&
                       r.verdicts[0].status == VerdictStatus::failure && r.verdicts[1].succeeded();
    const bool explored = run.turns[AgentRole::explorer] > 0 &&
                          !r.final_state.context.of_kind(ContextKind::qa).empty();
    if (!loops || !explored || !r.poc) {
        return {false, "record: " + serialize_run_record(r.record) + (r.poc_error ? " poc error: " + *r.poc_error : "")};
    }
    auto quality = validate_poc(*r.poc, &r.traces.back());

    fixture->reset();
    auto env = create_env(fixture->manifest(), std::nullopt);
    Evaluator evaluator;
    const bool replayed =
        replay_poc(*r.poc, *env, fixture->manifest().oracle, evaluator.sources(fixture->base_url(), nullptr), r.seeds);
    env->destroy();
    return {quality.all() && replayed, "tca 2, poc flags " + std::string(quality.all() ? "all true" : "incomplete") +
                                           ", replay " + (replayed ? "reproduced" : "failed")};
}

Outcome c5_toolexec() {
    auto fixture = start(FixtureName::toolexec);
    auto run = run_cassette(*fixture, "toolexec");
    log_run("toolexec", *fixture, run);
    const auto& r = run.result;
    if (!r.record.success || r.traces.empty()) {
        return {false, "record: " + serialize_run_record(r.record)};
    }
    // Malformed payloads answered with 4xx before the winning loop.
    int rejected = 0;
    for (std::size_t i = 0; i + 1 < r.traces.size(); ++i) {
        for (const auto& e : r.traces[i].events) {
            if (e.kind == TraceKind::http_response && e.body.rfind("HTTP 4", 0) == 0) {
                ++rejected;
            }
        }
    }
    bool tool_endpoint = false, exfiltrated = false;
    for (const auto& e : r.traces.back().events) {
        if (e.kind == TraceKind::http_request && e.body.find("/v1/tools/run") != std::string::npos) tool_endpoint = true;
        if (e.kind == TraceKind::http_response && e.body.find(fixture->seeded_secret()) != std::string::npos) exfiltrated = true;
    }
    const auto& last = r.verdicts.back();
    const bool oracle = last.succeeded() && last.kind == AttackType::file_access;
    return {rejected >= 1 && tool_endpoint && exfiltrated && oracle,
            std::to_string(rejected) + " rejected payload(s), tca " + std::to_string(*r.record.tca) +
                ", secret " + (exfiltrated ? "exfiltrated" : "missing") + ", file_access oracle " +
                (oracle ? "succeeded" : "failed")};
}

Outcome c6_budget() {
    auto fixture = start(FixtureName::regrole);
    auto run = run_cassette(*fixture, "regrole_never");
    log_run("regrole_never", *fixture, run);
    const auto& r = run.result.record;
    const bool engine_ok = !r.success && !r.infra_failure && r.attempts_used == 5 && r.loop_summaries.size() == 5;

    TempDir out;
    std::ostringstream sout, serr;
    const int code = run_cli({"run", "--manifest", fixture->manifest_path().string(), "--backend", "replay",
                              "--cassette", cassette("regrole_never").string(), "--out", out.path().string(),
                              "--output", "json"},
                             sout, serr);
    auto cli_record = read_file(out / "regrole/run-1/summary.json");
    const bool five = cli_record.find("\"attempts_used\": 5") != std::string::npos;
    return {engine_ok && code == kExitNotConfirmed && five,
            std::to_string(r.attempts_used) + " loops, " + std::to_string(r.loop_summaries.size()) +
                " summaries, exit code " + std::to_string(code)};
}

Outcome c8_trace_completeness() {
    std::string detail;
    bool ok = !g_runs.empty();
    for (const auto& run : g_runs) {
        if (run.env_interactions != run.trace_interactions) {
            ok = false;
            detail += run.label + " " + std::to_string(run.env_interactions) + "!=" +
                      std::to_string(run.trace_interactions) + " ";
        }
    }
    return {ok, ok ? std::to_string(g_runs.size()) + " replay runs, counts equal" : detail};
}

Outcome c9_blackbox() {
    auto fixture = start(FixtureName::regrole);
    RunSettings settings;
    settings.mode = EngineMode::blackbox_multi;
    auto run = run_cassette(*fixture, "regrole_blackbox", settings);
    log_run("regrole_blackbox", *fixture, run);
    const int explorer = run.turns[AgentRole::explorer];
    return {run.source_reads == 0 && explorer == 0 && !run.result.record.infra_failure,
            std::to_string(run.source_reads) + " source reads, " + std::to_string(explorer) + " explorer turns"};
}

void extra_fixture_runs() {
    {
        auto fixture = start(FixtureName::fileserve);
        log_run("fileserve", *fixture, run_cassette(*fixture, "fileserve"));
    }
    {
        auto fixture = start(FixtureName::fileserve, "outbound_service");
        RunSettings s;
        s.listener = true;
        log_run("fileserve_outbound", *fixture, run_cassette(*fixture, "fileserve_outbound", s));
    }
    {
        auto fixture = start(FixtureName::regrole);
        RunSettings s;
        s.mode = EngineMode::greybox_single;
        log_run("regrole_single", *fixture, run_cassette(*fixture, "regrole_single", s));
    }
}

Outcome c10_leakage() {
    std::string detail;
    for (const auto& run : g_runs) {
        for (const auto& leak : run.leaks) detail += run.label + ": " + leak + "; ";
    }
    return {detail.empty() && !g_runs.empty(), detail.empty() ? std::to_string(g_runs.size()) + " fixture runs scanned" : detail};
}

Outcome c11_metric_laws() {
    // SE strictly decreasing in AvgTCA on a 100-point grid over [1, MaxA].
    bool decreasing = true;
    double prev = success_efficiency(0.3, 1.0, 5);
    const bool identity = prev == 0.3;
    for (int i = 1; i < 100; ++i) {
        const double avg = 1.0 + 4.0 * i / 99.0;
        const double se = success_efficiency(0.3, avg, 5);
        decreasing = decreasing && se < prev;
        prev = se;
    }
    bool identity_all = identity;
    for (double sr : {0.0, 0.1, 0.175, 0.3, 1.0}) {
        identity_all = identity_all && success_efficiency(sr, 1.0, 5) == sr;
    }
    // Success@k non-decreasing in k on 1000 random record sets.
    std::mt19937_64 rng(20251015);
    bool monotone = true;
    for (int trial = 0; trial < 1000 && monotone; ++trial) {
        const int targets = 1 + static_cast<int>(rng() % 30);
        const int runs = 1 + static_cast<int>(rng() % 8);
        const double p = std::uniform_real_distribution<double>(0.0, 0.6)(rng);
        std::vector<RunRecord> set;
        for (int t = 0; t < targets; ++t) {
            for (int k = 1; k <= runs; ++k) {
                std::optional<int> tca;
                if (std::bernoulli_distribution(p)(rng)) tca = 1 + static_cast<int>(rng() % 5);
                set.push_back(record("t" + std::to_string(t), k, tca));
            }
        }
        std::shuffle(set.begin(), set.end(), rng);
        double last = 0.0;
        for (int k = 1; k <= runs; ++k) {
            const double v = success_at_k(set, k);
            monotone = monotone && v >= last;
            last = v;
        }
    }
    return {decreasing && identity_all && monotone,
            std::string("SE decreasing ") + (decreasing ? "yes" : "no") + ", SE=SR at AvgTCA 1 " +
                (identity_all ? "yes" : "no") + ", Success@k monotone " + (monotone ? "yes" : "no")};
}

// Drives the sandbox and an agent run straight at the forbidden port, then checks that
// nothing in this binary ever connected to it.
Outcome c7_isolation() {
    auto& forbidden = forbidden_listener();
    const auto url = "http://127.0.0.1:" + std::to_string(forbidden.port()) + "/";
    int denied = 0;
    {
        auto fixture = start(FixtureName::regrole);
        auto env = create_env(fixture->manifest(), std::nullopt);
        try {
            env->http_request("GET", url, {}, "");
        } catch (const PolicyError&) {
            ++denied;
        }
        try {
            env->exec_command("curl -s " + url);
        } catch (const PolicyError&) {
            ++denied;
        }
        env->destroy();

        Script script = parse_script("=== strategist 0\nDECISION: EXECUTE\nPLAN: probe\nSTEP 1 [http]: probe\n  REQUEST: GET " +
                                     url + "\n=== exploiter 0\nACTION:\nREQUEST: GET " + url +
                                     "\n=== exploiter 1\nACTION:\nRUN: curl -s " + url +
                                     "\n=== exploiter 2\nOUTCOME: FAILURE\nOBSERVATION: blocked\nANALYSIS: blocked\n");
        ScriptedBackend backend(script);
        RunSettings s;
        s.max_attempts = 1;
        auto run = run_instrumented(*fixture, backend, s);
        log_run("forbidden_probe", *fixture, run);
        for (const auto& t : run.result.traces) {
            for (const auto& e : t.events) {
                if (e.body.find("policy: ") != std::string::npos) {
                    ++denied;
                }
            }
        }
    }
    const int hits = forbidden.connections();
    return {hits == 0 && denied >= 3,
            std::to_string(hits) + " connections on port " + std::to_string(forbidden.port()) + ", " +
                std::to_string(denied) + " denials observed"};
}

} // namespace

int main() {
    forbidden_listener();
    struct Criterion {
        int id;
        std::string title;
        std::function<Outcome()> check;
        double limit_s;
    };
    // Order matters: 8 and 10 inspect the runs logged by the fixture criteria, 7 runs last.
    std::vector<Criterion> criteria{
        {1, "SE-formula oracle", c1_se_rows, 1},
        {2, "Success@k oracle", c2_success_at_k, 1},
        {3, "failure-distribution oracle", c3_distribution, 1},
        {4, "end-to-end regrole replay", c4_regrole, 60},
        {5, "end-to-end toolexec replay", c5_toolexec, 60},
        {6, "budget exhaustion", c6_budget, 60},
        {9, "black-box degradation", c9_blackbox, 60},
        {0, "", [] { extra_fixture_runs(); return Outcome{true, ""}; }, 120},
        {11, "metric laws", c11_metric_laws, 60},
        {7, "isolation", c7_isolation, 60},
        {8, "trace completeness", c8_trace_completeness, 1},
        {10, "oracle leakage", c10_leakage, 1},
    };
    std::map<int, std::string> lines;
    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        if (secs > c.limit_s) {
            o.pass = false;
            o.detail += " (took " + fmt(secs, 2) + "s, limit " + fmt(c.limit_s, 0) + "s)";
        }
        if (c.id == 0) {
            if (!o.pass) {
                lines[0] = "FAIL setup: " + o.detail;
                ++failures;
            }
            continue;
        }
        failures += o.pass ? 0 : 1;
        lines[c.id] = std::string(o.pass ? "PASS" : "FAIL") + " criterion " + std::to_string(c.id) + " " + c.title +
                      ": " + o.detail + " [" + fmt(secs, 3) + "s]";
    }
    for (const auto& [id, line] : lines) {
        std::cout << line << "\n";
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << "\n";
    return failures;
}
