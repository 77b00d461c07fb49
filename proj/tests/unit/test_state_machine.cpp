#include "doctest.h"

#include "vulnval/errors.hpp"
#include "vulnval/state_machine.hpp"

#include <random>

using namespace vulnval;
namespace fs = std::filesystem;

namespace {

Verdict verdict(bool ok) {
    Verdict v;
    v.status = ok ? VerdictStatus::success : VerdictStatus::failure;
    v.oracle_id = "o";
    return v;
}

EngineState fail_loop(EngineState s) {
    s = next_state(std::move(s), EngineEvent::of(EventKind::plan_execute));
    s = next_state(std::move(s), EngineEvent::of(EventKind::execution_done));
    return next_state(std::move(s), EngineEvent::verdict_of(verdict(false)));
}

} // namespace

TEST_SUITE("state_machine") {

TEST_CASE("explore, execute, succeed in the second loop") {
    EngineState s;
    s = fail_loop(std::move(s));
    CHECK(s.phase == Phase::refining);
    CHECK(s.loop_index == 1);
    s = next_state(std::move(s), EngineEvent::of(EventKind::plan_explore));
    CHECK(s.phase == Phase::exploring);
    s = next_state(std::move(s), EngineEvent::of(EventKind::exploration_done));
    CHECK(s.phase == Phase::planning);
    s = next_state(std::move(s), EngineEvent::of(EventKind::plan_execute));
    s = next_state(std::move(s), EngineEvent::of(EventKind::execution_done));
    s = next_state(std::move(s), EngineEvent::verdict_of(verdict(true)));
    CHECK(s.phase == Phase::succeeded);
    CHECK(s.tca == 2);
    CHECK(s.terminal());
}

TEST_CASE("MaxA failed loops exhaust the run") {
    EngineState s;
    s.max_attempts = 5;
    for (int i = 0; i < 5; ++i) s = fail_loop(std::move(s));
    CHECK(s.phase == Phase::exhausted);
    CHECK(s.loop_index == 4);
    CHECK_FALSE(s.tca.has_value());
    CHECK_THROWS_AS(next_state(s, EngineEvent::of(EventKind::plan_execute)), TransitionError);
}

TEST_CASE("abort ends the run with its reason") {
    auto s = next_state(EngineState{}, EngineEvent::abort("nothing to try"));
    CHECK(s.phase == Phase::exhausted);
    CHECK(s.abort_reason == "nothing to try");
}

TEST_CASE("illegal pairs are rejected") {
    EngineState s;
    CHECK_THROWS_AS(next_state(s, EngineEvent::of(EventKind::execution_done)), TransitionError);
    CHECK_THROWS_AS(next_state(s, EngineEvent::verdict_of(verdict(true))), TransitionError);
    s = next_state(s, EngineEvent::of(EventKind::plan_execute));
    CHECK_THROWS_AS(next_state(s, EngineEvent::of(EventKind::plan_explore)), TransitionError);
    CHECK_THROWS_AS(next_state(s, EngineEvent::of(EventKind::exploration_done)), TransitionError);
}

TEST_CASE("property: random event streams respect loop and tca invariants") {
    std::mt19937 rng(3);
    const EventKind kinds[] = {EventKind::plan_explore, EventKind::plan_execute, EventKind::plan_abort,
                               EventKind::exploration_done, EventKind::execution_done, EventKind::verdict_success,
                               EventKind::verdict_failure};
    for (int trial = 0; trial < 2000; ++trial) {
        EngineState s;
        s.max_attempts = 1 + rng() % 6;
        int failures = 0;
        for (int step = 0; step < 60 && !s.terminal(); ++step) {
            auto kind = kinds[rng() % 7];
            EngineEvent e = EngineEvent::of(kind);
            if (kind == EventKind::verdict_success || kind == EventKind::verdict_failure) {
                e = EngineEvent::verdict_of(verdict(kind == EventKind::verdict_success));
            }
            if (kind == EventKind::plan_abort && rng() % 5) continue;
            try {
                s = next_state(std::move(s), e);
                failures += kind == EventKind::verdict_failure ? 1 : 0;
            } catch (const TransitionError&) {
            }
            REQUIRE(s.loop_index < s.max_attempts);
            REQUIRE(s.loop_index == std::min(failures, s.max_attempts - 1));
        }
        if (s.phase == Phase::succeeded) {
            REQUIRE(s.tca == s.loop_index + 1);
            REQUIRE(*s.tca <= s.max_attempts);
        } else {
            REQUIRE_FALSE(s.tca.has_value());
        }
        if (s.phase == Phase::exhausted && !s.abort_reason) {
            REQUIRE(failures == s.max_attempts);
        }
    }
}

TEST_CASE("budgets must be positive") {
    Budgets b;
    CHECK_NOTHROW(b.validate());
    b.tool_budget = 0;
    CHECK_THROWS_AS(b.validate(), std::invalid_argument);
}

}
