#include "engine_common.hpp"

#include "vulnval/errors.hpp"
#include "vulnval/util.hpp"

namespace vulnval {

namespace fs = std::filesystem;

EnvFactory default_env_factory(std::optional<Authority> listener, EnvironmentSettings settings) {
    return [listener, settings](const TargetManifest& manifest) { return create_env(manifest, listener, settings); };
}

namespace detail {

namespace {

void check_reachable(const std::string& base_url) {
    HttpRequestSpec req;
    req.url = base_url + "/";
    req.timeout = std::chrono::seconds(5);
    try {
        http_send(req);
    } catch (const NetworkError& e) {
        throw TargetUnreachableError("target " + base_url + " is unreachable: " + e.what());
    }
}

} // namespace

RunSetup prepare_run(const TargetManifest& manifest, const EngineOptions& options, LlmBackend& backend,
                     const EnvFactory& env_factory, const Evaluator& evaluator, RunResult& result, EngineState& state) {
    options.budgets.validate();
    const bool blackbox = options.mode == EngineMode::blackbox_multi;
    if (!blackbox && (!manifest.source_root || !manifest.hint)) {
        throw std::invalid_argument("grey-box modes need source_root and hint in manifest " + manifest.target_id);
    }
    check_reachable(manifest.base_url);

    RunSetup s;
    s.view = blackbox ? blackbox_view(manifest) : manifest;
    s.run_id = options.run_id.value_or(manifest.target_id + "-r" + std::to_string(options.run_index) + "-" + random_hex(3));
    s.seeds["TARGET"] = manifest.base_url;
    if (options.callback_url) {
        s.seeds["CALLBACK_URL"] = *options.callback_url;
        s.extra_variables.push_back("CALLBACK_URL");
    }

    state = EngineState{};
    state.max_attempts = options.budgets.max_attempts;
    result.record.target_id = manifest.target_id;
    result.record.run_index = options.run_index;
    result.record.mode = options.mode;
    result.record.max_attempts = options.budgets.max_attempts;
    result.seeds = s.seeds;

    s.env = env_factory(s.view);

    // Run-specific strings become stable tokens so cassettes replay across ports and paths.
    PromptNormalizer normalizer;
    const auto target = Url::parse(manifest.base_url);
    normalizer.add(Url::parse(manifest.base_url).origin(), "{{TARGET}}");
    normalizer.add(manifest.base_url, "{{TARGET}}");
    normalizer.add(target.authority(), "{{TARGET_AUTHORITY}}");
    if (options.callback_url) {
        normalizer.add(*options.callback_url, "{{CALLBACK_URL}}");
        normalizer.add(Url::parse(*options.callback_url).origin(), "{{LISTENER}}");
    }
    normalizer.add(s.env->workdir().string(), "{{WORKDIR}}");
    if (manifest.source_root) {
        normalizer.add(manifest.source_root->string(), "{{SOURCE_ROOT}}");
    }
    backend.begin_run(std::move(normalizer));
    evaluator.begin_run();

    if (!blackbox) {
        s.tree.emplace(*manifest.source_root, options.source_observer);
        auto snippet = s.tree->extract(*manifest.hint);
        ContextEntry e;
        e.kind = ContextKind::observation;
        e.body = "Code at the hint location (" + manifest.hint->cwe_id + ")" +
                 (snippet.clamped ? ", clamped to the end of the file" : "") + ":";
        e.excerpts.push_back(std::move(snippet));
        state.context.append(std::move(e));
    }
    if (options.recon) {
        auto cache = options.recon_cache_dir.value_or(fs::temp_directory_path() / "vulnval-recon");
        auto wordlist = options.wordlist.empty() ? default_wordlist() : options.wordlist;
        auto endpoints = cached_endpoints(manifest.base_url, wordlist, cache, options.recon_options, &result.warnings);
        ContextEntry e;
        e.kind = ContextKind::endpoint_inventory;
        e.body = "Endpoints answering on the target (path status length):\n" + format_endpoint_inventory(endpoints);
        state.context.append(std::move(e));
    }
    return s;
}

bool conclude_loop(RunSetup& setup, const TargetManifest& manifest, const EngineOptions& options,
                   const Evaluator& evaluator, LlmBackend& backend, RunResult& result, EngineState& state,
                   ExploiterResult exploited, const ExploitPlan& plan) {
    const int loop = state.loop_index;
    const auto label = "loop " + std::to_string(loop + 1) + ": ";
    state = next_state(std::move(state), EngineEvent::of(EventKind::execution_done));
    auto verdict = evaluator.evaluate(manifest, exploited.trace);
    result.verdicts.push_back(verdict);
    result.outcomes.push_back(exploited.summary);
    result.traces.push_back(exploited.trace);

    if (verdict.status == VerdictStatus::withheld) {
        result.record.infra_failure = true;
        result.record.failure_reason = "oracle unavailable: " + verdict.evidence;
        result.record.loop_summaries.push_back(label + feedback_text(verdict));
        return false;
    }
    const auto feedback = feedback_text(verdict, manifest.oracle);
    if (verdict.succeeded()) {
        result.record.loop_summaries.push_back(label + "exploit confirmed by oracle " + verdict.oracle_id);
        result.winning_plan = plan;
        state = next_state(std::move(state), EngineEvent::verdict_of(verdict));
        if (options.generate_poc) {
            try {
                result.poc = generate_poc(exploited.trace, plan, setup.view, verdict, backend);
            } catch (const Error& e) {
                result.poc_error = e.what();
            }
        }
        return true;
    }

    const auto& summary = exploited.summary;
    std::string failure = summary.succeeded_locally ? "the exploiter believed the attempt worked"
                                                    : summary.failure_analysis.value_or("no analysis");
    if (!summary.observations.empty()) {
        failure += " Observations: " + join(summary.observations, " ");
    }
    ContextEntry f;
    f.loop_index = loop;
    f.kind = ContextKind::failure_summary;
    f.body = "Plan \"" + plan.objective + "\" did not succeed. Exploiter: " + failure;
    state.context.append(std::move(f));
    ContextEntry fb;
    fb.loop_index = loop;
    fb.kind = ContextKind::evaluator_feedback;
    fb.body = feedback;
    state.context.append(std::move(fb));
    result.record.loop_summaries.push_back(label + "exploit not confirmed; " + failure + " " + feedback);
    state = next_state(std::move(state), EngineEvent::verdict_of(verdict));
    return true;
}

void finish_run(RunSetup& setup, const TargetManifest&, const EngineOptions&, RunResult& result, EngineState& state) {
    auto& r = result.record;
    r.success = state.phase == Phase::succeeded;
    r.tca = state.tca;
    r.attempts_used = static_cast<int>(result.traces.size());
    if (!r.success && !r.failure_reason) {
        if (state.abort_reason) {
            r.failure_reason = "strategist aborted: " + *state.abort_reason;
        } else if (state.phase == Phase::exhausted) {
            r.failure_reason = "attempt budget exhausted after " + std::to_string(r.attempts_used) + " loops";
        }
    }
    if (setup.env) {
        setup.env->destroy();
    }
    result.final_state = state;
    validate_run_record(r);
}

} // namespace detail

RunResult run_exploitation(const TargetManifest& manifest, const EngineOptions& options, LlmBackend& backend,
                           const EnvFactory& env_factory, const Evaluator& evaluator) {
    if (options.mode == EngineMode::greybox_single) {
        throw std::invalid_argument("run_exploitation handles the multi-agent modes; use run_single_agent");
    }
    RunResult result;
    EngineState state;
    auto setup = detail::prepare_run(manifest, options, backend, env_factory, evaluator, result, state);
    const bool blackbox = options.mode == EngineMode::blackbox_multi;
    const auto& b = options.budgets;

    detail::guarded(result, [&] {
        int asked = 0;
        int asked_loop = 0;
        while (!state.terminal()) {
            if (state.loop_index != asked_loop) {
                asked_loop = state.loop_index;
                asked = 0;
            }
            StrategistInput in;
            in.manifest = &setup.view;
            in.context = &state.context;
            in.loop_index = state.loop_index;
            in.max_attempts = b.max_attempts;
            in.questions_left = b.explore_questions_per_loop - asked;
            in.blackbox = blackbox;
            in.variables = setup.extra_variables;
            auto envelope = strategist_decide(in, backend);

            switch (envelope.decision) {
            case Decision::abort:
                state = next_state(std::move(state), EngineEvent::abort(envelope.reason));
                break;
            case Decision::explore: {
                if (in.questions_left <= 0) {
                    state = next_state(std::move(state),
                                       EngineEvent::abort("exploration budget exhausted in loop " +
                                                          std::to_string(state.loop_index + 1) +
                                                          " without an execution plan"));
                    break;
                }
                state = next_state(std::move(state), EngineEvent::of(EventKind::plan_explore));
                const auto n = std::min<std::size_t>(envelope.questions.size(), static_cast<std::size_t>(in.questions_left));
                for (std::size_t q = 0; q < n; ++q) {
                    if (blackbox) {
                        ContextEntry e;
                        e.loop_index = state.loop_index;
                        e.kind = ContextKind::qa;
                        e.question = envelope.questions[q];
                        e.body = "Source code is not available in black-box mode; probe the target instead.";
                        e.incomplete = true;
                        state.context.append(std::move(e));
                    } else {
                        state.context.append(explorer_answer(envelope.questions[q], *setup.tree, backend, b.tool_budget,
                                                             state.loop_index));
                    }
                }
                asked += static_cast<int>(n);
                state = next_state(std::move(state), EngineEvent::of(EventKind::exploration_done));
                break;
            }
            case Decision::execute: {
                state = next_state(std::move(state), EngineEvent::of(EventKind::plan_execute));
                auto exploited = exploiter_run(envelope.plan, *setup.env, backend, b.exploiter_steps_per_loop, setup.seeds,
                                               setup.run_id + "-loop" + std::to_string(state.loop_index + 1),
                                               options.observation_limit);
                if (!detail::conclude_loop(setup, manifest, options, evaluator, backend, result, state,
                                           std::move(exploited), envelope.plan)) {
                    return;
                }
                break;
            }
            }
        }
    });
    detail::finish_run(setup, manifest, options, result, state);
    return result;
}

RunResult run_engine(const TargetManifest& manifest, const EngineOptions& options, LlmBackend& backend,
                     const EnvFactory& env_factory, const Evaluator& evaluator, KnowledgeStore* store) {
    if (options.mode == EngineMode::greybox_single) {
        if (!store) {
            throw std::invalid_argument("greybox-single mode needs a knowledge store");
        }
        return run_single_agent(manifest, options, backend, env_factory, evaluator, *store);
    }
    return run_exploitation(manifest, options, backend, env_factory, evaluator);
}

} // namespace vulnval
