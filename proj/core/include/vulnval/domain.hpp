#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vulnval {

// ---------------------------------------------------------------------------
// Enumerations. Every enum has a to_string / parse pair; parse throws
// std::invalid_argument listing the accepted spellings.
// ---------------------------------------------------------------------------

enum class AttackType {
    database_access,
    database_modification,
    file_creation,
    file_access,
    privilege_escalation,
    outbound_service,
    denial_of_service,
};

enum class ManifestMode { greybox, blackbox };

enum class EngineMode { greybox_multi, greybox_single, blackbox_multi };

enum class ContextKind { observation, qa, failure_summary, evaluator_feedback, endpoint_inventory };

enum class ActionKind { http, shell, write_file };

enum class TraceKind { command, stdout_text, stderr_text, http_request, http_response, note };

enum class VerdictStatus { success, failure, withheld };

enum class AgentRole { strategist, explorer, exploiter, poc_gen, summarizer };

std::string_view to_string(AttackType v);
std::string_view to_string(ManifestMode v);
std::string_view to_string(EngineMode v);
std::string_view to_string(ContextKind v);
std::string_view to_string(ActionKind v);
std::string_view to_string(TraceKind v);
std::string_view to_string(VerdictStatus v);
std::string_view to_string(AgentRole v);

AttackType parse_attack_type(std::string_view s);
ManifestMode parse_manifest_mode(std::string_view s);
/// Accepts both `greybox_multi` and the CLI spelling `greybox-multi`; `blackbox` maps to blackbox_multi.
EngineMode parse_engine_mode(std::string_view s);
ContextKind parse_context_kind(std::string_view s);
ActionKind parse_action_kind(std::string_view s);
TraceKind parse_trace_kind(std::string_view s);
VerdictStatus parse_verdict_status(std::string_view s);
AgentRole parse_agent_role(std::string_view s);

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

/// Detection metadata: a weakness class and one inclusive, 1-based line range.
struct VulnerabilityHint {
    std::string cwe_id;
    std::string file_path;
    int line_start = 1;
    int line_end = 1;
    std::optional<std::string> note;

    bool operator==(const VulnerabilityHint&) const = default;
};

struct OracleSpec {
    std::string oracle_id;
    AttackType kind = AttackType::database_access;
    std::map<std::string, std::string> params;

    bool operator==(const OracleSpec&) const = default;
};

/// Optional container runtime settings carried in the manifest `sandbox` object.
struct SandboxSettings {
    std::string runtime = "local"; ///< "local" or "container"
    std::string image;
    std::string socket = "/var/run/docker.sock";

    bool operator==(const SandboxSettings&) const = default;
};

struct TargetManifest {
    std::string target_id;
    std::string base_url;
    std::optional<std::filesystem::path> source_root;
    std::optional<VulnerabilityHint> hint;
    AttackType attack_type = AttackType::database_access;
    OracleSpec oracle;
    std::optional<std::string> reset_hook;
    ManifestMode mode = ManifestMode::greybox;
    /// Public goal statement shown to the agents (for example which file to read).
    std::optional<std::string> objective;
    std::optional<SandboxSettings> sandbox;

    bool operator==(const TargetManifest&) const = default;
};

struct ManifestParseOptions {
    /// Check that source_root exists and the hint file resolves under it.
    bool check_filesystem = true;
    /// Relative source_root values are resolved against this directory.
    std::optional<std::filesystem::path> base_dir;
};

/// Parses and validates a JSON manifest. Throws ManifestError naming the field path.
TargetManifest parse_target_manifest(std::string_view document, const ManifestParseOptions& options = {});
TargetManifest load_target_manifest(const std::filesystem::path& path, bool check_filesystem = true);
std::string serialize_target_manifest(const TargetManifest& manifest);

/// Structural checks shared by the parser and programmatic construction.
void validate_hint(const VulnerabilityHint& hint);
void validate_oracle(const OracleSpec& oracle);

/// Copy of the manifest with all grey-box inputs stripped.
TargetManifest blackbox_view(const TargetManifest& manifest);

// ---------------------------------------------------------------------------
// Source access
// ---------------------------------------------------------------------------

struct CodeSnippet {
    std::string file_path;
    int line_start = 1;
    int line_end = 1;
    std::string text;
    bool clamped = false;

    bool operator==(const CodeSnippet&) const = default;
};

// ---------------------------------------------------------------------------
// Working context
// ---------------------------------------------------------------------------

struct ContextEntry {
    int loop_index = 0;
    ContextKind kind = ContextKind::observation;
    std::optional<std::string> question;
    std::string body;
    std::vector<CodeSnippet> excerpts;
    bool incomplete = false;

    bool operator==(const ContextEntry&) const = default;
};

/// Append-only record shared by the agents of one run.
class WorkingContext {
public:
    /// Throws std::invalid_argument when loop_index decreases.
    void append(ContextEntry entry);

    std::span<const ContextEntry> entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

    std::vector<const ContextEntry*> of_kind(ContextKind kind) const;

private:
    std::vector<ContextEntry> entries_;
};

std::string serialize_context(const WorkingContext& context);

// ---------------------------------------------------------------------------
// Actions and plans
// ---------------------------------------------------------------------------

/// Named dynamic value pulled from a response by regex capture group 1.
struct Extraction {
    std::string name;
    std::string source = "body"; ///< body | stdout | header:<Name>
    std::string pattern;

    bool operator==(const Extraction&) const = default;
};

/// One concrete interaction. Text form (one directive per line):
///   REQUEST: <METHOD> <url>   HEADER: <Name>: <value>   BODY: <text>
///   RUN: <shell command>
///   WRITE: <path>             CONTENT: <text>
///   EXTRACT: <name> <- <source> /<regex>/
/// Lines after BODY:/CONTENT: that are not directives continue the payload.
struct Action {
    ActionKind kind = ActionKind::http;
    std::string method;
    std::string url;
    std::vector<std::pair<std::string, std::string>> headers;
    std::string body;
    std::string command;
    std::string path;
    std::string content;
    std::vector<Extraction> extracts;

    bool operator==(const Action&) const = default;
};

/// Throws std::invalid_argument on malformed text.
Action parse_action(std::string_view text);
std::string render_action(const Action& action);

struct PlanStep {
    std::string description;
    ActionKind action_kind = ActionKind::http;
    std::string payload;
    std::string expected_signal;

    bool operator==(const PlanStep&) const = default;
};

struct ExploitPlan {
    std::string objective;
    std::vector<PlanStep> steps;

    bool operator==(const ExploitPlan&) const = default;
};

/// Throws std::invalid_argument when the plan has no steps or a step has an empty payload.
void validate_plan(const ExploitPlan& plan);

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

struct TraceEvent {
    std::int64_t seq = 0;
    std::string timestamp;
    TraceKind kind = TraceKind::note;
    std::string body;
    std::optional<int> exit_code;

    bool operator==(const TraceEvent&) const = default;
};

struct ExecutionTrace {
    std::string run_id;
    std::vector<TraceEvent> events;

    /// Appends with seq = previous seq + 1 and the current UTC time.
    const TraceEvent& append(TraceKind kind, std::string body, std::optional<int> exit_code = std::nullopt);

    /// Count of command and http_request events.
    std::size_t interaction_count() const;
};

/// Returns a description of the first violated trace invariant, if any.
std::optional<std::string> check_trace(const ExecutionTrace& trace);

std::string serialize_trace_ndjson(const ExecutionTrace& trace);
ExecutionTrace parse_trace_ndjson(std::string_view text, std::string run_id);
void write_trace(const ExecutionTrace& trace, const std::filesystem::path& path);
/// run_id is taken from the file stem.
ExecutionTrace read_trace(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Outcomes
// ---------------------------------------------------------------------------

struct Verdict {
    VerdictStatus status = VerdictStatus::failure;
    std::string oracle_id;
    std::string evidence;
    std::string checked_at;
    std::optional<AttackType> kind;

    bool succeeded() const noexcept { return status == VerdictStatus::success; }
};

struct RunRecord {
    std::string target_id;
    int run_index = 1;
    EngineMode mode = EngineMode::greybox_multi;
    bool success = false;
    std::optional<int> tca;
    int attempts_used = 0;
    int max_attempts = 5;
    std::vector<std::string> loop_summaries;
    /// Run could not be assessed (launch, reset, oracle channel or backend failure).
    bool infra_failure = false;
    std::optional<std::string> failure_reason;

    bool operator==(const RunRecord&) const = default;
};

/// Throws std::invalid_argument when success/tca/attempt invariants do not hold.
void validate_run_record(const RunRecord& record);

std::string serialize_run_record(const RunRecord& record);
RunRecord parse_run_record(std::string_view json_line);
std::vector<RunRecord> read_records(const std::filesystem::path& path);
void append_record(const std::filesystem::path& path, const RunRecord& record);

} // namespace vulnval
