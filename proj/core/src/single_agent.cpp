// Single-agent baseline: one conversation per loop owns source reads and target
// interactions, and records durable facts in the knowledge store.

#include "engine_common.hpp"

#include "vulnval/errors.hpp"
#include "vulnval/util.hpp"

#include <regex>

namespace vulnval {

namespace {

struct SingleReply {
    std::vector<FactEntry> facts;
    std::optional<ExplorerReply> tool;
    std::optional<ExploiterReply> step;
};

SingleReply parse_single_reply(std::string_view text) {
    static const std::regex fact_re(R"(^FACT:\s*([a-z_]+):\s*(.+)$)");
    SingleReply r;
    std::vector<std::string> rest;
    bool tool = false;
    for (const auto& line : split_lines(text)) {
        auto t = trim(line);
        std::smatch m;
        if (std::regex_match(t, m, fact_re)) {
            try {
                r.facts.push_back({parse_fact_category(m[1].str()), trim(m[2].str()), ""});
            } catch (const std::invalid_argument& e) {
                throw EnvelopeError(e.what());
            }
            continue;
        }
        tool = tool || t.rfind("TOOL:", 0) == 0;
        rest.push_back(line);
    }
    const auto body = join(rest, "\n");
    if (tool) {
        auto reply = parse_explorer_reply(body);
        if (reply.kind != ExplorerReply::Kind::tool) {
            throw EnvelopeError("expected a TOOL, ACTION or OUTCOME block");
        }
        r.tool = std::move(reply);
    } else {
        r.step = parse_exploiter_reply(body);
    }
    return r;
}

SingleReply next_reply(LlmBackend& backend, Conversation& conversation) {
    auto reply = backend.complete(conversation, AgentRole::strategist);
    conversation.assistant(reply.content);
    try {
        return parse_single_reply(reply.content);
    } catch (const EnvelopeError& first) {
        conversation.user(std::string(kEnvelopeReminder) + "\nProblem: " + first.what());
    }
    reply = backend.complete(conversation, AgentRole::strategist);
    conversation.assistant(reply.content);
    try {
        return parse_single_reply(reply.content);
    } catch (const EnvelopeError& second) {
        throw EnvelopeError(std::string("malformed single-agent reply after one retry: ") + second.what());
    }
}

std::string describe(const ActionOutcome& o, int step) {
    if (o.command) {
        return "interaction " + std::to_string(step) + ": command exited with status " +
               std::to_string(o.command->exit_code);
    }
    return "interaction " + std::to_string(step) + ": " + (o.error.empty() ? "no response" : o.error);
}

} // namespace

RunResult run_single_agent(const TargetManifest& manifest, const EngineOptions& options, LlmBackend& backend,
                           const EnvFactory& env_factory, const Evaluator& evaluator, KnowledgeStore& store) {
    if (options.mode != EngineMode::greybox_single) {
        throw std::invalid_argument("run_single_agent needs mode greybox_single");
    }
    RunResult result;
    EngineState state;
    auto setup = detail::prepare_run(manifest, options, backend, env_factory, evaluator, result, state);
    const auto& b = options.budgets;
    const int tool_cap = b.explore_questions_per_loop * b.tool_budget;

    detail::guarded(result, [&] {
        while (!state.terminal()) {
            const int loop = state.loop_index;
            state = next_state(std::move(state), EngineEvent::of(EventKind::plan_execute));

            std::string hint;
            if (setup.view.hint) {
                hint = "\n## Vulnerability hint\nWeakness: " + setup.view.hint->cwe_id + "\nLocation: " +
                       setup.view.hint->file_path + " lines " + std::to_string(setup.view.hint->line_start) + "-" +
                       std::to_string(setup.view.hint->line_end) + "\n";
            }
            std::vector<std::string> vars{"TARGET"};
            vars.insert(vars.end(), setup.extra_variables.begin(), setup.extra_variables.end());
            auto conversation = Conversation::start(prompt_template("single_agent"));
            conversation.user(render_template(
                prompt_template("single_agent_user"),
                {{"target_id", setup.view.target_id},
                 {"base_url", setup.view.base_url},
                 {"attack_type", std::string(to_string(setup.view.attack_type))},
                 {"objective", setup.view.objective.value_or("demonstrate " + std::string(to_string(setup.view.attack_type)))},
                 {"loop", std::to_string(loop + 1)},
                 {"max_attempts", std::to_string(b.max_attempts)},
                 {"tool_budget", std::to_string(tool_cap)},
                 {"step_budget", std::to_string(b.exploiter_steps_per_loop)},
                 {"variables", join(vars, ", ")},
                 {"hint", hint},
                 {"knowledge", store.render()},
                 {"context", render_context(state.context)}}));

            ExploiterResult ex;
            ex.trace.run_id = setup.run_id + "-loop" + std::to_string(loop + 1);
            ex.summary.trace_ref = ex.trace.run_id;
            ex.variables = setup.seeds;
            ExploitPlan plan;
            plan.objective = "single-agent loop " + std::to_string(loop + 1);
            int tools = 0;
            int steps = 0;
            std::optional<ActionOutcome> last;

            while (true) {
                auto reply = next_reply(backend, conversation);
                for (auto& fact : reply.facts) {
                    fact.source_run = setup.run_id;
                    store.add(std::move(fact));
                }
                if (reply.tool) {
                    if (tools == tool_cap) {
                        ex.summary.failure_analysis = "source tool budget of " + std::to_string(tool_cap) + " calls exhausted";
                        break;
                    }
                    ++tools;
                    auto out = run_source_tool(*setup.tree, reply.tool->tool, reply.tool->args);
                    conversation.user("RESULT (" + std::to_string(tools) + " of " + std::to_string(tool_cap) + "):\n" + out);
                    continue;
                }
                const auto& step = *reply.step;
                if (step.kind == ExploiterReply::Kind::outcome) {
                    ex.summary.observations = step.observations;
                    if (step.success && steps > 0 && (!last || last->ok)) {
                        ex.summary.succeeded_locally = true;
                    } else if (step.success) {
                        ex.summary.failure_analysis = last ? describe(*last, steps) : "no interaction was performed";
                    } else {
                        ex.summary.failure_analysis =
                            !step.analysis.empty() ? step.analysis
                                                   : (last && !last->ok ? describe(*last, steps)
                                                                        : "the agent reported failure without an analysis");
                    }
                    break;
                }
                if (steps == b.exploiter_steps_per_loop) {
                    ex.summary.failure_analysis = "step budget of " + std::to_string(b.exploiter_steps_per_loop) +
                                                  " interactions exhausted";
                    break;
                }
                ++steps;
                const auto before = ex.variables;
                auto outcome = run_action(*setup.env, step.action, ex.variables, ex.trace);
                ex.actions.emplace_back(step.action, outcome.ok);
                plan.steps.push_back({"interaction " + std::to_string(steps), step.action.kind, render_action(step.action), ""});
                if (outcome.response) {
                    store.add({FactCategory::endpoint,
                               outcome.expanded.method + " " + split(Url::parse(outcome.expanded.url).path, '?').front() +
                                   " -> " + std::to_string(outcome.response->status),
                               setup.run_id});
                }
                std::string observation = render_observation(outcome, std::size_t{1} << 20);
                for (const auto& [k, v] : ex.variables) {
                    auto it = before.find(k);
                    if (it == before.end() || it->second != v) {
                        observation += "extracted " + k + " = " + truncate_middle(v, 200) + "\n";
                    }
                }
                observation = summarize_output(observation, backend, options.observation_limit);
                conversation.user("OBSERVATION (interaction " + std::to_string(steps) + " of " +
                                  std::to_string(b.exploiter_steps_per_loop) + "):\n" + observation);
                last = std::move(outcome);
            }
            if (!detail::conclude_loop(setup, manifest, options, evaluator, backend, result, state, std::move(ex), plan)) {
                return;
            }
        }
    });
    detail::finish_run(setup, manifest, options, result, state);
    return result;
}

} // namespace vulnval
