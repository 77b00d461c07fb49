#include "doctest.h"
#include "support.hpp"

#include "vulnval/engine.hpp"
#include "vulnval/errors.hpp"
#include "vulnval/llm_stub.hpp"
#include "vulnval/util.hpp"

using namespace vulnval;
namespace fs = std::filesystem;

namespace {

struct Case {
    const char* cassette;
    FixtureName fixture;
    const char* variant;
    EngineMode mode;
    bool listener;
    bool success;
};

const Case kCases[] = {
    {"regrole", FixtureName::regrole, "file_access", EngineMode::greybox_multi, false, true},
    {"toolexec", FixtureName::toolexec, "file_access", EngineMode::greybox_multi, false, true},
    {"fileserve", FixtureName::fileserve, "file_access", EngineMode::greybox_multi, false, true},
    {"fileserve_outbound", FixtureName::fileserve, "outbound_service", EngineMode::greybox_multi, true, true},
    {"regrole_never", FixtureName::regrole, "file_access", EngineMode::greybox_multi, false, false},
    {"regrole_blackbox", FixtureName::regrole, "file_access", EngineMode::blackbox_multi, false, true},
    {"regrole_single", FixtureName::regrole, "file_access", EngineMode::greybox_single, false, true},
};

/// Invariants every completed run must satisfy, whatever its outcome.
void check_run_invariants(const TargetManifest& m, const vvtest::InstrumentedRun& run) {
    const auto& r = run.result.record;
    CHECK_NOTHROW(validate_run_record(r));
    CHECK(r.loop_summaries.size() == static_cast<std::size_t>(r.attempts_used));
    CHECK(run.result.traces.size() == run.result.verdicts.size());
    CHECK(run.result.traces.size() <= static_cast<std::size_t>(r.attempts_used));
    for (const auto& t : run.result.traces) CHECK_FALSE(check_trace(t).has_value());
    CHECK(run.env_interactions == vvtest::trace_interactions(run.result));
    CHECK(vvtest::leaked_secrets(m, run.result).empty());
    if (r.success) {
        REQUIRE(!run.result.verdicts.empty());
        CHECK(run.result.verdicts.back().succeeded());
        CHECK(r.tca == r.attempts_used);
        for (std::size_t i = 0; i + 1 < run.result.verdicts.size(); ++i) {
            CHECK_FALSE(run.result.verdicts[i].succeeded());
        }
    }
}

} // namespace

TEST_SUITE("engine") {

TEST_CASE("every shipped cassette replays to its recorded outcome") {
    for (const auto& c : kCases) {
        CAPTURE(c.cassette);
        auto fixture = vvtest::start(c.fixture, c.variant);
        vvtest::RunSettings s;
        s.mode = c.mode;
        s.listener = c.listener;
        auto run = vvtest::run_cassette(*fixture, c.cassette, s);
        const auto& r = run.result.record;
        CHECK_FALSE(r.infra_failure);
        CHECK(r.success == c.success);
        CHECK(r.mode == c.mode);
        check_run_invariants(fixture->manifest(), run);
        if (c.success) {
            REQUIRE(run.result.poc.has_value());
            CHECK(validate_poc(*run.result.poc, &run.result.traces.back()).all());
        } else {
            CHECK(r.attempts_used == 5);
            CHECK_FALSE(run.result.poc.has_value());
        }
    }
}

TEST_CASE("the budget caps loops") {
    auto fixture = vvtest::start(FixtureName::regrole);
    vvtest::RunSettings s;
    s.max_attempts = 1;
    // The budget appears in the prompts, so cassettes recorded with five attempts do not
    // match; the scripted backend answers by role and turn only.
    ScriptedBackend backend(load_script(vvtest::script("regrole")));
    auto run = vvtest::run_instrumented(*fixture, backend, s);
    CHECK_FALSE(run.result.record.success);
    CHECK_FALSE(run.result.record.infra_failure);
    CAPTURE(run.result.record.failure_reason.value_or(""));
    CHECK(run.result.record.attempts_used == 1);
    CHECK(run.result.record.max_attempts == 1);
    check_run_invariants(fixture->manifest(), run);
}

TEST_CASE("a cassette miss ends the run as an infrastructure failure") {
    auto fixture = vvtest::start(FixtureName::toolexec);
    auto run = vvtest::run_cassette(*fixture, "regrole");
    CHECK(run.result.record.infra_failure);
    CHECK_FALSE(run.result.record.success);
    REQUIRE(run.result.record.failure_reason.has_value());
    CHECK(run.result.record.failure_reason->rfind("backend:", 0) == 0);
}

TEST_CASE("a scripted abort ends the run without an infrastructure failure") {
    auto fixture = vvtest::start(FixtureName::regrole);
    ScriptedBackend backend(parse_script("=== strategist 0\nDECISION: ABORT\nREASON: nothing plausible\n"));
    auto run = vvtest::run_instrumented(*fixture, backend);
    CHECK_FALSE(run.result.record.success);
    CHECK_FALSE(run.result.record.infra_failure);
    CHECK(run.result.final_state.abort_reason.has_value());
    CHECK(run.env_interactions == 0);
}

TEST_CASE("an unreachable target is rejected before any turn") {
    auto fixture = vvtest::start(FixtureName::regrole);
    auto m = fixture->manifest();
    fixture->stop();
    ScriptedBackend backend(Script{});
    EngineOptions o;
    o.recon = false;
    Evaluator evaluator;
    CHECK_THROWS_AS(run_exploitation(m, o, backend, default_env_factory(), evaluator), TargetUnreachableError);
    CHECK(backend.turns_taken(AgentRole::strategist) == 0);
}

TEST_CASE("single-agent mode needs a knowledge store") {
    auto fixture = vvtest::start(FixtureName::regrole);
    ScriptedBackend backend(Script{});
    EngineOptions o;
    o.mode = EngineMode::greybox_single;
    Evaluator evaluator;
    CHECK_THROWS_AS(run_engine(fixture->manifest(), o, backend, default_env_factory(), evaluator, nullptr),
                    std::invalid_argument);
}

TEST_CASE("black-box runs never read source") {
    auto fixture = vvtest::start(FixtureName::regrole);
    vvtest::RunSettings s;
    s.mode = EngineMode::blackbox_multi;
    auto run = vvtest::run_cassette(*fixture, "regrole_blackbox", s);
    CHECK(run.source_reads == 0);
    CHECK(run.turns[AgentRole::explorer] == 0);
    const auto& hint = *fixture->manifest().hint;
    for (const auto& msg : run.transcript) {
        CHECK(msg.find(hint.file_path) == std::string::npos);
    }
}

}
