#pragma once

#include "vulnval/action_runner.hpp"
#include "vulnval/domain.hpp"
#include "vulnval/evaluator.hpp"
#include "vulnval/llm_backend.hpp"
#include "vulnval/sandbox.hpp"

#include <optional>
#include <string>
#include <vector>

namespace vulnval {

struct PoCReport {
    std::string title;
    std::string summary;
    std::vector<std::string> affected_components;
    std::vector<CodeSnippet> code_locations;
    std::string trigger;
    std::string oracle_description;
    /// Each step is action text (REQUEST/RUN/WRITE with optional EXTRACT lines);
    /// dynamic values appear as {{name}} placeholders.
    std::vector<std::string> reproduction_steps;
    std::optional<std::string> dynamic_value_setup;
    std::optional<std::string> remediation;
    std::string source_trace;

    bool operator==(const PoCReport&) const = default;
};

struct QualityCheck {
    bool has_oracle = false;
    bool has_steps = false;
    bool trace_consistent = false;

    bool all() const { return has_oracle && has_steps && trace_consistent; }
};

/// Index of the first reproduction step with no in-order counterpart among the
/// trace's interactions, or nullopt when every step matches. Placeholders match any
/// text; relative URLs match any origin.
std::optional<std::size_t> first_inconsistent_step(const PoCReport& report, const ExecutionTrace& trace);

/// Structural check. trace_consistent requires the source trace; without one it is false.
QualityCheck validate_poc(const PoCReport& report, const ExecutionTrace* trace);

/// Parses the generator's TITLE/SUMMARY/COMPONENT/TRIGGER/ORACLE/SETUP/STEP/REMEDIATION
/// reply into a partial report. Throws PocError when no step is present.
PoCReport parse_poc_reply(std::string_view text);

/// Kind-specific description of what to check, never including parameter values.
std::string describe_oracle(const OracleSpec& oracle);

/// Asks the poc_gen role for a report and checks it against the trace.
/// Throws PocPreconditionError (verdict not success, empty trace) or
/// PocConsistencyError (a step with no counterpart in the trace).
PoCReport generate_poc(const ExecutionTrace& trace, const ExploitPlan& plan, const TargetManifest& manifest,
                       const Verdict& verdict, LlmBackend& backend);

/// Compact interaction listing used in the generator prompt (no timestamps).
std::string render_trace_for_prompt(const ExecutionTrace& trace, std::size_t max_body = 1500);

std::string render_poc_markdown(const PoCReport& report);
std::string poc_to_json(const PoCReport& report);
/// Throws PocError on malformed JSON or missing fields.
PoCReport parse_poc_json(std::string_view text);

struct ReplayOutcome {
    bool success = false;
    /// 1-based index of the failing step, when a step failed.
    std::optional<int> failed_step;
    std::string diagnostics;
    Verdict verdict;
    ExecutionTrace trace;
};

/// Runs the steps literally in `env` (re-extracting dynamic values), then the oracle.
/// `sources.trace` is replaced by the replay trace.
ReplayOutcome replay_poc_detailed(const PoCReport& report, ExecutionEnvironment& env, const OracleSpec& oracle,
                                  EvidenceSources sources, const Variables& seeds);

bool replay_poc(const PoCReport& report, ExecutionEnvironment& env, const OracleSpec& oracle, EvidenceSources sources,
                const Variables& seeds);

} // namespace vulnval
