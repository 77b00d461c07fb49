#pragma once

#include "vulnval/domain.hpp"

#include <optional>
#include <string>

namespace vulnval {

struct Budgets {
    int max_attempts = 5;
    int explore_questions_per_loop = 8;
    int exploiter_steps_per_loop = 25;
    /// Explorer tool calls per question.
    int tool_budget = 8;

    /// Throws std::invalid_argument unless every budget is positive.
    void validate() const;
};

enum class Phase { init, planning, exploring, executing, evaluating, refining, succeeded, exhausted };

std::string_view to_string(Phase v);

enum class EventKind {
    plan_explore,
    plan_execute,
    plan_abort,
    exploration_done,
    execution_done,
    verdict_success,
    verdict_failure,
};

std::string_view to_string(EventKind v);

struct EngineEvent {
    EventKind kind = EventKind::plan_execute;
    /// plan_abort only.
    std::string reason;
    /// verdict_* only.
    std::optional<Verdict> verdict;

    static EngineEvent of(EventKind kind) { return {kind, {}, std::nullopt}; }
    static EngineEvent abort(std::string reason) { return {EventKind::plan_abort, std::move(reason), std::nullopt}; }
    static EngineEvent verdict_of(Verdict v) {
        auto kind = v.succeeded() ? EventKind::verdict_success : EventKind::verdict_failure;
        return {kind, {}, std::move(v)};
    }
};

struct EngineState {
    Phase phase = Phase::init;
    int loop_index = 0;
    int max_attempts = 5;
    WorkingContext context;
    std::optional<Verdict> last_verdict;
    std::optional<std::string> abort_reason;
    /// Set on success: loop_index + 1.
    std::optional<int> tca;

    bool terminal() const { return phase == Phase::succeeded || phase == Phase::exhausted; }
};

/// Pure transition function. init and refining accept plan events like planning.
/// Throws TransitionError for an illegal (phase, event) pair.
EngineState next_state(EngineState state, const EngineEvent& event);

} // namespace vulnval
