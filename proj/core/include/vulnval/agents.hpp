#pragma once

#include "vulnval/action_runner.hpp"
#include "vulnval/domain.hpp"
#include "vulnval/llm_backend.hpp"
#include "vulnval/recon.hpp"
#include "vulnval/sandbox.hpp"
#include "vulnval/source_tree.hpp"

#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace vulnval {

// ---------------------------------------------------------------------------
// Strategist envelope
// ---------------------------------------------------------------------------

enum class Decision { explore, execute, abort };

std::string_view to_string(Decision v);

struct AgentEnvelope {
    Decision decision = Decision::abort;
    std::vector<std::string> questions;
    ExploitPlan plan;
    std::string reason;
    std::string raw;
};

/// Parses a DECISION block (optionally inside a ``` fence). Throws EnvelopeError
/// for a malformed block and "decision/payload mismatch" when the payload does
/// not match the decision.
AgentEnvelope parse_agent_envelope(std::string_view text);

/// Reminder appended to the conversation before the single re-prompt.
extern const char* const kEnvelopeReminder;

/// Completes the conversation and parses the reply, re-prompting once with the
/// format reminder. The conversation is extended with every exchange.
AgentEnvelope request_envelope(LlmBackend& backend, Conversation& conversation, AgentRole role);

// ---------------------------------------------------------------------------
// Prompts
// ---------------------------------------------------------------------------

/// Built-in prompt asset "prompts/<name>.txt". Throws Error when absent.
std::string prompt_template(std::string_view name);

/// Everything the strategist is shown for one decision.
struct StrategistInput {
    const TargetManifest* manifest = nullptr;
    /// Seeded by the engine with the hint snippet and the endpoint inventory.
    const WorkingContext* context = nullptr;
    int loop_index = 0;
    int max_attempts = 5;
    int questions_left = 8;
    bool blackbox = false;
    /// Extra variables the exploiter can reference, such as CALLBACK_URL.
    std::vector<std::string> variables;
};

/// Numbered "STEP i [kind]: payload" lines, with EXPECT lines where present.
std::string render_plan(const ExploitPlan& plan);

/// Renders context entries grouped as compact Q&A, failure summaries and evaluator feedback.
std::string render_context(const WorkingContext& context);

std::string strategist_prompt(const StrategistInput& input);

/// One strategist turn. Throws BackendError or EnvelopeError.
AgentEnvelope strategist_decide(const StrategistInput& input, LlmBackend& backend);

// ---------------------------------------------------------------------------
// Explorer
// ---------------------------------------------------------------------------

/// Explorer reply: either a tool call or a final answer.
struct ExplorerReply {
    enum class Kind { tool, answer } kind = Kind::answer;
    std::string tool;
    std::vector<std::string> args;
    std::string answer;
    /// Cited ranges "path:start-end" turned into verbatim snippets by the caller.
    std::vector<std::tuple<std::string, int, int>> citations;
};

/// Throws EnvelopeError on an unrecognized reply.
ExplorerReply parse_explorer_reply(std::string_view text);

/// Runs one deterministic primitive (list_dir, read_file, search_text, path_exists) and
/// returns its textual result. Errors are returned as text, never thrown.
std::string run_source_tool(const SourceTree& tree, const std::string& tool, const std::vector<std::string>& args);

/// Answers one question with at most `tool_budget` tool calls. When the budget runs
/// out the entry is flagged incomplete and carries what was gathered.
ContextEntry explorer_answer(const std::string& question, const SourceTree& tree, LlmBackend& backend,
                             int tool_budget, int loop_index);

// ---------------------------------------------------------------------------
// Exploiter
// ---------------------------------------------------------------------------

struct OutcomeSummary {
    bool succeeded_locally = false;
    std::vector<std::string> observations;
    std::optional<std::string> failure_analysis;
    std::string trace_ref;
};

struct ExploiterReply {
    enum class Kind { action, outcome } kind = Kind::outcome;
    Action action;
    bool success = false;
    std::vector<std::string> observations;
    std::string analysis;
};

/// Throws EnvelopeError on an unrecognized reply or a malformed action.
ExploiterReply parse_exploiter_reply(std::string_view text);

struct ExploiterResult {
    ExecutionTrace trace;
    OutcomeSummary summary;
    /// Values extracted during the run (TARGET and other seeds included).
    Variables variables;
    /// Actions as written by the agent, in execution order, with the outcome of each.
    std::vector<std::pair<Action, bool>> actions;
};

/// Drives the plan through the environment, one agent turn per interaction, with at most
/// `step_budget` interactions. Observations longer than `observation_limit` are summarized.
ExploiterResult exploiter_run(const ExploitPlan& plan, ExecutionEnvironment& env, LlmBackend& backend, int step_budget,
                              const Variables& seed_variables, std::string run_id,
                              std::size_t observation_limit = 4000);

// ---------------------------------------------------------------------------
// Summarizer
// ---------------------------------------------------------------------------

/// Inputs within max_length pass through. Longer inputs go to the summarizer role;
/// a backend failure or an over-long reply falls back to head+tail truncation.
std::string summarize_output(const std::string& raw, LlmBackend& backend, std::size_t max_length);

} // namespace vulnval
