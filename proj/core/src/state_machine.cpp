#include "vulnval/state_machine.hpp"

#include "vulnval/errors.hpp"

#include <stdexcept>

namespace vulnval {

void Budgets::validate() const {
    if (max_attempts < 1 || explore_questions_per_loop < 1 || exploiter_steps_per_loop < 1 || tool_budget < 1) {
        throw std::invalid_argument("budgets must all be positive");
    }
}

std::string_view to_string(Phase v) {
    switch (v) {
    case Phase::init: return "init";
    case Phase::planning: return "planning";
    case Phase::exploring: return "exploring";
    case Phase::executing: return "executing";
    case Phase::evaluating: return "evaluating";
    case Phase::refining: return "refining";
    case Phase::succeeded: return "succeeded";
    case Phase::exhausted: return "exhausted";
    }
    return "?";
}

std::string_view to_string(EventKind v) {
    switch (v) {
    case EventKind::plan_explore: return "plan_ready(explore)";
    case EventKind::plan_execute: return "plan_ready(execute)";
    case EventKind::plan_abort: return "plan_ready(abort)";
    case EventKind::exploration_done: return "exploration_done";
    case EventKind::execution_done: return "execution_done";
    case EventKind::verdict_success: return "verdict(success)";
    case EventKind::verdict_failure: return "verdict(failure)";
    }
    return "?";
}

EngineState next_state(EngineState s, const EngineEvent& e) {
    auto illegal = [&] {
        return TransitionError("illegal event " + std::string(to_string(e.kind)) + " in phase " +
                               std::string(to_string(s.phase)));
    };
    if (s.terminal()) {
        throw illegal();
    }
    const bool deciding = s.phase == Phase::init || s.phase == Phase::planning || s.phase == Phase::refining;
    switch (e.kind) {
    case EventKind::plan_explore:
        if (!deciding) throw illegal();
        s.phase = Phase::exploring;
        break;
    case EventKind::plan_execute:
        if (!deciding) throw illegal();
        s.phase = Phase::executing;
        break;
    case EventKind::plan_abort:
        if (!deciding) throw illegal();
        s.phase = Phase::exhausted;
        s.abort_reason = e.reason;
        break;
    case EventKind::exploration_done:
        if (s.phase != Phase::exploring) throw illegal();
        s.phase = Phase::planning;
        break;
    case EventKind::execution_done:
        if (s.phase != Phase::executing) throw illegal();
        s.phase = Phase::evaluating;
        break;
    case EventKind::verdict_success:
        if (s.phase != Phase::evaluating) throw illegal();
        s.phase = Phase::succeeded;
        s.tca = s.loop_index + 1;
        s.last_verdict = e.verdict;
        break;
    case EventKind::verdict_failure:
        if (s.phase != Phase::evaluating) throw illegal();
        s.last_verdict = e.verdict;
        if (s.loop_index + 1 >= s.max_attempts) {
            s.phase = Phase::exhausted;
        } else {
            s.phase = Phase::refining;
            ++s.loop_index;
        }
        break;
    }
    return s;
}

} // namespace vulnval
