#pragma once

#include "vulnval/engine.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vulnval {

/// Runs the manifest's reset_hook: "http:<METHOD> <path>" against base_url (2xx expected)
/// or "cmd:<shell>" (exit 0 expected). A manifest without a hook is a no-op.
/// Throws HarnessError describing the failure.
void run_reset_hook(const TargetManifest& manifest, std::chrono::milliseconds timeout = std::chrono::seconds(10));

/// Callback URL handed to the agents: <listener>/callback/<oracle listener_token>.
std::string callback_url_for(const TargetManifest& manifest, const CallbackListener& listener);

/// Writes traces/<loop run id>.ndjson, context.json, poc.md and poc.json (when present) and summary.json.
void persist_run(const std::filesystem::path& run_dir, const RunResult& result);

/// Fresh backend per run; lets parallel targets each own their turn counters.
using BackendFactory = std::function<std::unique_ptr<LlmBackend>(const TargetManifest& manifest, int run_index)>;

struct BenchmarkOptions {
    int runs_per_target = 1;
    /// An unset callback_url is derived per target from the evaluator's listener.
    EngineOptions engine;
    /// Records are appended here as runs finish; per-run directories go under out_dir/<target>/run-<k>.
    std::filesystem::path out_dir;
    std::optional<std::filesystem::path> records_path;
    /// Knowledge stores for greybox_single; defaults to out_dir/knowledge.
    std::optional<std::filesystem::path> knowledge_dir;
    /// Targets run concurrently up to this width; runs of one target are always sequential.
    int parallel = 1;
    /// Called after every run (serialized).
    std::function<void(const RunResult&)> on_run;
};

struct BenchmarkResult {
    std::vector<RunRecord> records;
    std::filesystem::path records_path;
    int infra_failures = 0;
};

/// Exactly runs_per_target records per target. Reset, launch and backend failures become
/// records marked infra_failure and the remaining runs are still attempted.
/// Throws std::invalid_argument for bad options or duplicate target ids.
BenchmarkResult run_benchmark(std::span<const TargetManifest> manifests, const BenchmarkOptions& options,
                              const BackendFactory& backends, const EnvFactory& env_factory, const Evaluator& evaluator);

} // namespace vulnval
