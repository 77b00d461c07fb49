#include "vulnval/domain.hpp"

#include "json_io.hpp"
#include "vulnval/util.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

namespace vulnval {

namespace {

template <typename E, std::size_t N>
std::string_view name_of(E v, const std::array<std::pair<E, std::string_view>, N>& table) {
    for (const auto& [e, name] : table) {
        if (e == v) {
            return name;
        }
    }
    return "unknown";
}

template <typename E, std::size_t N>
E value_of(std::string_view s, const std::array<std::pair<E, std::string_view>, N>& table, std::string_view what) {
    for (const auto& [e, name] : table) {
        if (name == s) {
            return e;
        }
    }
    std::string valid;
    for (const auto& entry : table) {
        if (!valid.empty()) {
            valid += ", ";
        }
        valid += entry.second;
    }
    throw std::invalid_argument("unknown " + std::string(what) + " '" + std::string(s) + "' (expected one of: " + valid + ")");
}

constexpr std::array<std::pair<AttackType, std::string_view>, 7> attack_types{{
    {AttackType::database_access, "database_access"},
    {AttackType::database_modification, "database_modification"},
    {AttackType::file_creation, "file_creation"},
    {AttackType::file_access, "file_access"},
    {AttackType::privilege_escalation, "privilege_escalation"},
    {AttackType::outbound_service, "outbound_service"},
    {AttackType::denial_of_service, "denial_of_service"},
}};

constexpr std::array<std::pair<ManifestMode, std::string_view>, 2> manifest_modes{{
    {ManifestMode::greybox, "greybox"},
    {ManifestMode::blackbox, "blackbox"},
}};

constexpr std::array<std::pair<EngineMode, std::string_view>, 3> engine_modes{{
    {EngineMode::greybox_multi, "greybox_multi"},
    {EngineMode::greybox_single, "greybox_single"},
    {EngineMode::blackbox_multi, "blackbox_multi"},
}};

constexpr std::array<std::pair<ContextKind, std::string_view>, 5> context_kinds{{
    {ContextKind::observation, "observation"},
    {ContextKind::qa, "qa"},
    {ContextKind::failure_summary, "failure_summary"},
    {ContextKind::evaluator_feedback, "evaluator_feedback"},
    {ContextKind::endpoint_inventory, "endpoint_inventory"},
}};

constexpr std::array<std::pair<ActionKind, std::string_view>, 3> action_kinds{{
    {ActionKind::http, "http"},
    {ActionKind::shell, "shell"},
    {ActionKind::write_file, "write_file"},
}};

constexpr std::array<std::pair<TraceKind, std::string_view>, 6> trace_kinds{{
    {TraceKind::command, "command"},
    {TraceKind::stdout_text, "stdout"},
    {TraceKind::stderr_text, "stderr"},
    {TraceKind::http_request, "http_request"},
    {TraceKind::http_response, "http_response"},
    {TraceKind::note, "note"},
}};

constexpr std::array<std::pair<VerdictStatus, std::string_view>, 3> verdict_statuses{{
    {VerdictStatus::success, "success"},
    {VerdictStatus::failure, "failure"},
    {VerdictStatus::withheld, "withheld"},
}};

constexpr std::array<std::pair<AgentRole, std::string_view>, 5> agent_roles{{
    {AgentRole::strategist, "strategist"},
    {AgentRole::explorer, "explorer"},
    {AgentRole::exploiter, "exploiter"},
    {AgentRole::poc_gen, "poc_gen"},
    {AgentRole::summarizer, "summarizer"},
}};

} // namespace

std::string_view to_string(AttackType v) { return name_of(v, attack_types); }
std::string_view to_string(ManifestMode v) { return name_of(v, manifest_modes); }
std::string_view to_string(EngineMode v) { return name_of(v, engine_modes); }
std::string_view to_string(ContextKind v) { return name_of(v, context_kinds); }
std::string_view to_string(ActionKind v) { return name_of(v, action_kinds); }
std::string_view to_string(TraceKind v) { return name_of(v, trace_kinds); }
std::string_view to_string(VerdictStatus v) { return name_of(v, verdict_statuses); }
std::string_view to_string(AgentRole v) { return name_of(v, agent_roles); }

AttackType parse_attack_type(std::string_view s) { return value_of(s, attack_types, "attack_type"); }
ManifestMode parse_manifest_mode(std::string_view s) { return value_of(s, manifest_modes, "mode"); }
ContextKind parse_context_kind(std::string_view s) { return value_of(s, context_kinds, "context kind"); }
ActionKind parse_action_kind(std::string_view s) { return value_of(s, action_kinds, "action kind"); }
TraceKind parse_trace_kind(std::string_view s) { return value_of(s, trace_kinds, "trace kind"); }
VerdictStatus parse_verdict_status(std::string_view s) { return value_of(s, verdict_statuses, "verdict status"); }
AgentRole parse_agent_role(std::string_view s) { return value_of(s, agent_roles, "agent role"); }

EngineMode parse_engine_mode(std::string_view s) {
    if (s == "greybox-multi") {
        return EngineMode::greybox_multi;
    }
    if (s == "greybox-single") {
        return EngineMode::greybox_single;
    }
    if (s == "blackbox" || s == "blackbox-multi") {
        return EngineMode::blackbox_multi;
    }
    return value_of(s, engine_modes, "mode");
}

void WorkingContext::append(ContextEntry entry) {
    if (!entries_.empty() && entry.loop_index < entries_.back().loop_index) {
        throw std::invalid_argument("context loop_index must be non-decreasing (got " +
                                    std::to_string(entry.loop_index) + " after " +
                                    std::to_string(entries_.back().loop_index) + ")");
    }
    if (entry.loop_index < 0) {
        throw std::invalid_argument("context loop_index must be >= 0");
    }
    entries_.push_back(std::move(entry));
}

std::vector<const ContextEntry*> WorkingContext::of_kind(ContextKind kind) const {
    std::vector<const ContextEntry*> out;
    for (const auto& e : entries_) {
        if (e.kind == kind) {
            out.push_back(&e);
        }
    }
    return out;
}

std::string serialize_context(const WorkingContext& context) {
    json entries = json::array();
    for (const auto& e : context.entries()) {
        entries.push_back(e);
    }
    return json{{"entries", entries}}.dump(2);
}

void validate_plan(const ExploitPlan& plan) {
    if (plan.steps.empty()) {
        throw std::invalid_argument("plan has no steps");
    }
    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
        if (trim(plan.steps[i].payload).empty()) {
            throw std::invalid_argument("plan step " + std::to_string(i + 1) + " has an empty payload");
        }
    }
}

void validate_run_record(const RunRecord& r) {
    if (r.run_index < 1) {
        throw std::invalid_argument("run_index must be >= 1");
    }
    if (r.success != r.tca.has_value()) {
        throw std::invalid_argument("record " + r.target_id + "#" + std::to_string(r.run_index) +
                                    ": success must hold exactly when tca is present");
    }
    if (r.tca && (*r.tca < 1 || *r.tca > r.attempts_used)) {
        throw std::invalid_argument("record " + r.target_id + "#" + std::to_string(r.run_index) +
                                    ": tca must be in [1, attempts_used]");
    }
    if (r.attempts_used < 0 || r.attempts_used > r.max_attempts) {
        throw std::invalid_argument("record " + r.target_id + "#" + std::to_string(r.run_index) +
                                    ": attempts_used must be in [0, max_attempts]");
    }
}

TargetManifest blackbox_view(const TargetManifest& manifest) {
    TargetManifest view = manifest;
    view.source_root.reset();
    view.hint.reset();
    view.mode = ManifestMode::blackbox;
    return view;
}

// --- json conversions -------------------------------------------------------

void to_json(json& j, const VulnerabilityHint& v) {
    j = json{{"cwe_id", v.cwe_id}, {"file_path", v.file_path}, {"line_start", v.line_start}, {"line_end", v.line_end}};
    if (v.note) {
        j["note"] = *v.note;
    }
}

void to_json(json& j, const OracleSpec& v) {
    j = json{{"oracle_id", v.oracle_id}, {"kind", to_string(v.kind)}, {"params", v.params}};
}

void to_json(json& j, const CodeSnippet& v) {
    j = json{{"file_path", v.file_path},
             {"line_start", v.line_start},
             {"line_end", v.line_end},
             {"text", v.text},
             {"clamped", v.clamped}};
}

void from_json(const json& j, CodeSnippet& v) {
    v.file_path = j.at("file_path").get<std::string>();
    v.line_start = j.at("line_start").get<int>();
    v.line_end = j.at("line_end").get<int>();
    v.text = j.at("text").get<std::string>();
    v.clamped = j.value("clamped", false);
}

void to_json(json& j, const ContextEntry& v) {
    j = json{{"loop_index", v.loop_index}, {"kind", to_string(v.kind)}, {"body", v.body}, {"excerpts", v.excerpts}};
    if (v.question) {
        j["question"] = *v.question;
    }
    if (v.incomplete) {
        j["incomplete"] = true;
    }
}

void from_json(const json& j, ContextEntry& v) {
    v.loop_index = j.at("loop_index").get<int>();
    v.kind = parse_context_kind(j.at("kind").get<std::string>());
    v.question = optional_field<std::string>(j, "question");
    v.body = j.at("body").get<std::string>();
    v.excerpts = j.value("excerpts", std::vector<CodeSnippet>{});
    v.incomplete = j.value("incomplete", false);
}

void to_json(json& j, const TraceEvent& v) {
    j = json{{"seq", v.seq}, {"timestamp", v.timestamp}, {"kind", to_string(v.kind)}, {"body", v.body}};
    if (v.exit_code) {
        j["exit_code"] = *v.exit_code;
    }
}

void from_json(const json& j, TraceEvent& v) {
    v.seq = j.at("seq").get<std::int64_t>();
    v.timestamp = j.at("timestamp").get<std::string>();
    v.kind = parse_trace_kind(j.at("kind").get<std::string>());
    v.body = j.at("body").get<std::string>();
    v.exit_code = optional_field<int>(j, "exit_code");
}

void to_json(json& j, const Verdict& v) {
    j = json{{"status", to_string(v.status)}, {"oracle_id", v.oracle_id}, {"evidence", v.evidence},
             {"checked_at", v.checked_at}};
    if (v.kind) {
        j["kind"] = to_string(*v.kind);
    }
}

void from_json(const json& j, Verdict& v) {
    v.status = parse_verdict_status(j.at("status").get<std::string>());
    v.oracle_id = j.at("oracle_id").get<std::string>();
    v.evidence = j.value("evidence", "");
    v.checked_at = j.value("checked_at", "");
    if (auto k = optional_field<std::string>(j, "kind")) {
        v.kind = parse_attack_type(*k);
    }
}

void to_json(json& j, const RunRecord& v) {
    j = json{{"target_id", v.target_id},
             {"run_index", v.run_index},
             {"mode", to_string(v.mode)},
             {"success", v.success},
             {"tca", v.tca ? json(*v.tca) : json(nullptr)},
             {"attempts_used", v.attempts_used},
             {"max_attempts", v.max_attempts},
             {"loop_summaries", v.loop_summaries}};
    if (v.infra_failure) {
        j["infra_failure"] = true;
    }
    if (v.failure_reason) {
        j["failure_reason"] = *v.failure_reason;
    }
}

void from_json(const json& j, RunRecord& v) {
    v.target_id = j.at("target_id").get<std::string>();
    v.run_index = j.at("run_index").get<int>();
    v.mode = parse_engine_mode(j.at("mode").get<std::string>());
    v.success = j.at("success").get<bool>();
    v.tca = optional_field<int>(j, "tca");
    v.attempts_used = j.at("attempts_used").get<int>();
    v.max_attempts = j.value("max_attempts", 5);
    v.loop_summaries = j.value("loop_summaries", std::vector<std::string>{});
    v.infra_failure = j.value("infra_failure", false);
    v.failure_reason = optional_field<std::string>(j, "failure_reason");
}

void to_json(json& j, const PlanStep& v) {
    j = json{{"description", v.description},
             {"action_kind", to_string(v.action_kind)},
             {"payload", v.payload},
             {"expected_signal", v.expected_signal}};
}

void to_json(json& j, const ExploitPlan& v) { j = json{{"objective", v.objective}, {"steps", v.steps}}; }

} // namespace vulnval
