#pragma once

#include "vulnval/agents.hpp"
#include "vulnval/domain.hpp"
#include "vulnval/evaluator.hpp"
#include "vulnval/knowledge.hpp"
#include "vulnval/llm_backend.hpp"
#include "vulnval/poc.hpp"
#include "vulnval/recon.hpp"
#include "vulnval/sandbox.hpp"
#include "vulnval/source_tree.hpp"
#include "vulnval/state_machine.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace vulnval {

struct EngineOptions {
    EngineMode mode = EngineMode::greybox_multi;
    Budgets budgets;
    int run_index = 1;
    /// Defaults to "<target>-r<run_index>-<random>".
    std::optional<std::string> run_id;
    bool recon = true;
    /// Endpoint cache directory; defaults to <tmp>/vulnval-recon.
    std::optional<std::filesystem::path> recon_cache_dir;
    /// Empty means the built-in wordlist.
    std::vector<std::string> wordlist;
    ReconOptions recon_options;
    /// Sees every source-tree read made by the run.
    SourceTree::Observer source_observer;
    /// Exposed to the agents as {{CALLBACK_URL}} for outbound oracles.
    std::optional<std::string> callback_url;
    bool generate_poc = true;
    std::size_t observation_limit = 4000;
};

struct RunResult {
    RunRecord record;
    /// One trace per executed loop.
    std::vector<ExecutionTrace> traces;
    std::vector<Verdict> verdicts;
    std::vector<OutcomeSummary> outcomes;
    std::optional<PoCReport> poc;
    std::optional<std::string> poc_error;
    std::optional<ExploitPlan> winning_plan;
    /// Seed variables (TARGET, CALLBACK_URL) used by the run, for PoC replay.
    Variables seeds;
    EngineState final_state;
    std::vector<std::string> warnings;
};

/// Environment per run; the default builds the manifest's sandbox with the listener allowlisted.
EnvFactory default_env_factory(std::optional<Authority> listener = std::nullopt, EnvironmentSettings settings = {});

/// Multi-agent loop for greybox_multi and blackbox_multi. Throws TargetUnreachableError
/// when the target does not answer at start and std::invalid_argument for bad inputs;
/// backend, environment and agent-format failures end the run and are recorded.
RunResult run_exploitation(const TargetManifest& manifest, const EngineOptions& options, LlmBackend& backend,
                           const EnvFactory& env_factory, const Evaluator& evaluator);

/// Single-agent baseline: one role plans, reads source and executes within the same
/// per-loop budgets, recording durable facts in `store` and prepending them to prompts.
RunResult run_single_agent(const TargetManifest& manifest, const EngineOptions& options, LlmBackend& backend,
                           const EnvFactory& env_factory, const Evaluator& evaluator, KnowledgeStore& store);

/// Dispatches on options.mode; greybox_single requires a store.
RunResult run_engine(const TargetManifest& manifest, const EngineOptions& options, LlmBackend& backend,
                     const EnvFactory& env_factory, const Evaluator& evaluator, KnowledgeStore* store = nullptr);

} // namespace vulnval
