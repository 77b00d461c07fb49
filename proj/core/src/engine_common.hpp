#pragma once

// Run setup and per-loop evaluation shared by the multi-agent and single-agent engines.

#include "vulnval/engine.hpp"
#include "vulnval/errors.hpp"

#include <memory>
#include <optional>

namespace vulnval::detail {

struct RunSetup {
    /// The manifest as the agents see it (grey-box inputs stripped in black-box mode).
    TargetManifest view;
    std::string run_id;
    std::unique_ptr<ExecutionEnvironment> env;
    std::optional<SourceTree> tree;
    Variables seeds;
    /// Variable names besides TARGET that prompts advertise.
    std::vector<std::string> extra_variables;
};

/// Validates inputs, checks reachability, builds the environment and source view,
/// installs the prompt normalizer and seeds the context with the snippet and endpoints.
RunSetup prepare_run(const TargetManifest& manifest, const EngineOptions& options, LlmBackend& backend,
                     const EnvFactory& env_factory, const Evaluator& evaluator, RunResult& result, EngineState& state);

/// Evaluates one executed loop and advances the state. Returns false when the oracle
/// was unavailable, which ends the run as an infrastructure failure.
bool conclude_loop(RunSetup& setup, const TargetManifest& manifest, const EngineOptions& options,
                   const Evaluator& evaluator, LlmBackend& backend, RunResult& result, EngineState& state,
                   ExploiterResult exploited, const ExploitPlan& plan);

/// Runs `body`, converting backend, environment and agent-format failures into a recorded outcome.
template <typename Body>
void guarded(RunResult& result, Body&& body) {
    try {
        body();
    } catch (const BackendError& e) {
        result.record.infra_failure = true;
        result.record.failure_reason = std::string("backend: ") + e.what();
    } catch (const EnvironmentError& e) {
        result.record.infra_failure = true;
        result.record.failure_reason = std::string("environment: ") + e.what();
    } catch (const EnvelopeError& e) {
        result.record.failure_reason = std::string("agent output: ") + e.what();
    }
}

/// Fills the record from the final state and destroys the environment.
void finish_run(RunSetup& setup, const TargetManifest& manifest, const EngineOptions& options, RunResult& result,
                EngineState& state);

} // namespace vulnval::detail
