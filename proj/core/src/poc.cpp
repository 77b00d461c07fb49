#include "vulnval/poc.hpp"

#include "vulnval/agents.hpp"
#include "vulnval/errors.hpp"
#include "vulnval/source_tree.hpp"
#include "vulnval/util.hpp"

#include "json_io.hpp"

#include <regex>

namespace vulnval {

namespace {

std::string regex_escape(std::string_view s) {
    static const std::string special = R"(\^$.|?*+()[]{}/-)";
    std::string out;
    for (char c : s) {
        if (special.find(c) != std::string::npos) {
            out += '\\';
        }
        out += c;
    }
    return out;
}

// Literal text with {{name}} placeholders turned into lazy wildcards.
std::regex placeholder_pattern(std::string_view text) {
    std::string pattern;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto open = text.find("{{", pos);
        auto close = open == std::string_view::npos ? open : text.find("}}", open + 2);
        if (close == std::string_view::npos) {
            pattern += regex_escape(text.substr(pos));
            break;
        }
        pattern += regex_escape(text.substr(pos, open - pos));
        pattern += R"([\s\S]*?)";
        pos = close + 2;
    }
    return std::regex(pattern);
}

std::string strip_origin(const std::string& url) {
    for (std::string_view scheme : {"http://", "https://"}) {
        if (url.rfind(scheme, 0) == 0) {
            auto slash = url.find('/', scheme.size());
            return slash == std::string::npos ? "/" : url.substr(slash);
        }
    }
    return url;
}

struct Interaction {
    ActionKind kind;
    std::string method;
    std::string path;
    std::string body;
    std::string command;
};

std::vector<Interaction> interactions_of(const ExecutionTrace& trace) {
    std::vector<Interaction> out;
    for (const auto& e : trace.events) {
        if (e.kind == TraceKind::http_request) {
            Interaction it{ActionKind::http, "", "", "", ""};
            auto nl = e.body.find('\n');
            auto first = e.body.substr(0, nl);
            auto sp = first.find(' ');
            it.method = first.substr(0, sp);
            it.path = sp == std::string::npos ? "" : strip_origin(first.substr(sp + 1));
            auto blank = e.body.find("\n\n");
            it.body = blank == std::string::npos ? "" : e.body.substr(blank + 2);
            out.push_back(std::move(it));
        } else if (e.kind == TraceKind::command) {
            out.push_back({ActionKind::shell, "", "", "", e.body});
        }
    }
    return out;
}

bool step_matches(const Action& step, const Interaction& it) {
    if (step.kind == ActionKind::http) {
        if (it.kind != ActionKind::http || it.method != step.method) {
            return false;
        }
        std::string url = step.url;
        if (url.rfind("{{TARGET}}", 0) == 0) {
            url = url.substr(10);
        }
        url = strip_origin(url);
        return std::regex_match(it.path, placeholder_pattern(url)) &&
               std::regex_match(trim(it.body), placeholder_pattern(trim(step.body)));
    }
    if (it.kind != ActionKind::shell) {
        return false;
    }
    const auto command = step.kind == ActionKind::shell ? trim(step.command) : "write_file " + step.path;
    return std::regex_match(trim(it.command), placeholder_pattern(command));
}

const std::vector<std::string>& poc_directives() {
    static const std::vector<std::string> d{"TITLE:", "SUMMARY:", "COMPONENT:", "TRIGGER:", "ORACLE:",
                                            "SETUP:", "STEP:",    "REMEDIATION:"};
    return d;
}

} // namespace

std::optional<std::size_t> first_inconsistent_step(const PoCReport& report, const ExecutionTrace& trace) {
    auto seen = interactions_of(trace);
    std::size_t cursor = 0;
    for (std::size_t i = 0; i < report.reproduction_steps.size(); ++i) {
        Action step;
        try {
            step = parse_action(report.reproduction_steps[i]);
        } catch (const std::invalid_argument&) {
            return i;
        }
        bool found = false;
        for (; cursor < seen.size(); ++cursor) {
            if (step_matches(step, seen[cursor])) {
                found = true;
                ++cursor;
                break;
            }
        }
        if (!found) {
            return i;
        }
    }
    return std::nullopt;
}

QualityCheck validate_poc(const PoCReport& report, const ExecutionTrace* trace) {
    QualityCheck q;
    q.has_oracle = !trim(report.oracle_description).empty();
    q.has_steps = !report.reproduction_steps.empty() && !trim(report.trigger).empty();
    q.trace_consistent = trace && !report.reproduction_steps.empty() && trace->run_id == report.source_trace &&
                         !first_inconsistent_step(report, *trace);
    return q;
}

PoCReport parse_poc_reply(std::string_view text) {
    PoCReport r;
    std::string* open = nullptr;
    std::vector<std::string>* step = nullptr;
    std::vector<std::vector<std::string>> steps;
    std::string setup;
    std::string remediation;
    for (const auto& raw : split_lines(text)) {
        const auto t = trim(raw);
        if (t.rfind("```", 0) == 0) {
            continue;
        }
        std::string directive;
        for (const auto& d : poc_directives()) {
            if (t.rfind(d, 0) == 0) {
                directive = d;
                break;
            }
        }
        if (directive.empty()) {
            if (step) {
                step->push_back(raw);
            } else if (open && !t.empty()) {
                *open += (open->empty() ? "" : " ") + t;
            }
            continue;
        }
        auto value = trim(t.substr(directive.size()));
        step = nullptr;
        open = nullptr;
        if (directive == "TITLE:") {
            r.title = value;
            open = &r.title;
        } else if (directive == "SUMMARY:") {
            r.summary = value;
            open = &r.summary;
        } else if (directive == "COMPONENT:") {
            r.affected_components.push_back(value);
        } else if (directive == "TRIGGER:") {
            r.trigger = value;
            open = &r.trigger;
        } else if (directive == "ORACLE:") {
            r.oracle_description = value;
            open = &r.oracle_description;
        } else if (directive == "SETUP:") {
            setup = value;
            open = &setup;
        } else if (directive == "REMEDIATION:") {
            remediation = value;
            open = &remediation;
        } else {
            steps.emplace_back();
            if (!value.empty()) {
                steps.back().push_back(value);
            }
            step = &steps.back();
        }
    }
    for (std::size_t i = 0; i < steps.size(); ++i) {
        auto& lines = steps[i];
        while (!lines.empty() && trim(lines.back()).empty()) {
            lines.pop_back();
        }
        auto body = join(lines, "\n");
        try {
            r.reproduction_steps.push_back(render_action(parse_action(body)));
        } catch (const std::invalid_argument& e) {
            throw PocError("reproduction step " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    if (r.reproduction_steps.empty()) {
        throw PocError("report has no STEP blocks");
    }
    if (!setup.empty()) {
        r.dynamic_value_setup = setup;
    }
    if (!remediation.empty()) {
        r.remediation = remediation;
    }
    return r;
}

std::string describe_oracle(const OracleSpec& oracle) {
    switch (oracle.kind) {
    case AttackType::file_creation:
        return "Check that the expected file exists on the target host with the expected content.";
    case AttackType::file_access:
        return "Check that the protected file's content (the seeded secret) appears in a response or command output "
               "visible to the attacker.";
    case AttackType::database_access:
        return "Check that the protected database value (the seeded secret) appears in attacker-visible output.";
    case AttackType::database_modification:
        return "Run the evaluator's database probe and check that it reports the expected persistent change.";
    case AttackType::privilege_escalation:
        return "Query the evaluator's principal probe and check that an attacker-created account holds administrative "
               "privileges.";
    case AttackType::outbound_service:
        return "Check that the callback listener received a request from the target carrying the run's token.";
    case AttackType::denial_of_service:
        return "Check that the health endpoint stops answering within the failure threshold.";
    }
    return "Run the evaluator oracle " + oracle.oracle_id + ".";
}

std::string render_trace_for_prompt(const ExecutionTrace& trace, std::size_t max_body) {
    std::string out;
    int n = 0;
    for (const auto& e : trace.events) {
        switch (e.kind) {
        case TraceKind::http_request:
            out += "[" + std::to_string(++n) + "] request\n" + truncate_middle(e.body, max_body) + "\n";
            break;
        case TraceKind::command:
            out += "[" + std::to_string(++n) + "] command (exit " + std::to_string(e.exit_code.value_or(0)) + ")\n" +
                   e.body + "\n";
            break;
        case TraceKind::http_response:
            out += "response\n" + truncate_middle(e.body, max_body) + "\n";
            break;
        case TraceKind::stdout_text:
            out += "stdout\n" + truncate_middle(e.body, max_body) + "\n";
            break;
        case TraceKind::stderr_text:
            out += "stderr\n" + truncate_middle(e.body, max_body) + "\n";
            break;
        case TraceKind::note:
            if (e.body.rfind("action:", 0) != 0) {
                out += "note: " + e.body + "\n";
            }
            break;
        }
    }
    return out;
}

PoCReport generate_poc(const ExecutionTrace& trace, const ExploitPlan& plan, const TargetManifest& manifest,
                       const Verdict& verdict, LlmBackend& backend) {
    if (!verdict.succeeded()) {
        throw PocPreconditionError("a PoC needs a successful verdict, got " + std::string(to_string(verdict.status)));
    }
    if (trace.interaction_count() == 0) {
        throw PocPreconditionError("source trace " + trace.run_id + " has no interactions");
    }
    std::string location = "n/a";
    if (manifest.hint) {
        location = manifest.hint->file_path + " lines " + std::to_string(manifest.hint->line_start) + "-" +
                   std::to_string(manifest.hint->line_end);
    }
    auto conversation = Conversation::start(prompt_template("poc_gen"));
    conversation.user(render_template(
        prompt_template("poc_gen_user"),
        {{"target_id", manifest.target_id},
         {"cwe", manifest.hint ? manifest.hint->cwe_id : "unknown"},
         {"location", location},
         {"oracle_id", manifest.oracle.oracle_id},
         {"oracle_kind", std::string(to_string(manifest.oracle.kind))},
         {"evidence", verdict.evidence},
         {"objective", plan.objective},
         {"trace", render_trace_for_prompt(trace)}}));

    PoCReport r;
    auto reply = backend.complete(conversation, AgentRole::poc_gen);
    conversation.assistant(reply.content);
    try {
        r = parse_poc_reply(reply.content);
    } catch (const PocError& first) {
        conversation.user(std::string(kEnvelopeReminder) + "\nProblem: " + first.what());
        reply = backend.complete(conversation, AgentRole::poc_gen);
        conversation.assistant(reply.content);
        try {
            r = parse_poc_reply(reply.content);
        } catch (const PocError& second) {
            throw PocError(std::string("malformed PoC reply after one retry: ") + second.what());
        }
    }

    r.source_trace = trace.run_id;
    if (r.title.empty()) {
        r.title = (manifest.hint ? manifest.hint->cwe_id : std::string(to_string(manifest.attack_type))) + " in " +
                  manifest.target_id;
    }
    if (manifest.hint) {
        CodeSnippet snippet{manifest.hint->file_path, manifest.hint->line_start, manifest.hint->line_end, "", false};
        if (manifest.source_root) {
            try {
                snippet = extract_snippet(*manifest.source_root, *manifest.hint);
            } catch (const SourceError&) {
                // keep the bare location
            }
        }
        r.code_locations.insert(r.code_locations.begin(), snippet);
        if (r.affected_components.empty()) {
            r.affected_components.push_back(manifest.hint->file_path);
        }
    }
    if (trim(r.oracle_description).empty()) {
        r.oracle_description = describe_oracle(manifest.oracle);
    }
    if (trim(r.trigger).empty()) {
        r.trigger = split_lines(r.reproduction_steps.back()).front();
    }
    if (!r.dynamic_value_setup) {
        std::vector<std::string> names;
        for (const auto& s : r.reproduction_steps) {
            for (const auto& ex : parse_action(s).extracts) {
                names.push_back(ex.name);
            }
        }
        if (!names.empty()) {
            r.dynamic_value_setup = "Capture " + join(names, ", ") + " with the EXTRACT lines before they are used.";
        }
    }
    if (auto bad = first_inconsistent_step(r, trace)) {
        throw PocConsistencyError("reproduction step " + std::to_string(*bad + 1) + " (" +
                                  split_lines(r.reproduction_steps[*bad]).front() + ") has no counterpart in trace " +
                                  trace.run_id);
    }
    return r;
}

std::string render_poc_markdown(const PoCReport& r) {
    std::string out = "# " + r.title + "\n\n## Summary\n\n" + r.summary + "\n\nSource trace: `" + r.source_trace +
                      "`\n\n## Affected Components\n\n";
    for (const auto& c : r.affected_components) {
        out += "- " + c + "\n";
    }
    out += "\n## Code Locations\n\n";
    for (const auto& s : r.code_locations) {
        out += "- `" + s.file_path + "` lines " + std::to_string(s.line_start) + "-" + std::to_string(s.line_end) + "\n";
        if (!s.text.empty()) {
            out += "\n```\n" + s.text + (s.text.back() == '\n' ? "" : "\n") + "```\n";
        }
    }
    out += "\n## Trigger\n\n```\n" + r.trigger + "\n```\n\n## Verification Oracle\n\n" + r.oracle_description +
           "\n\n## Reproduction Steps\n\n";
    if (r.dynamic_value_setup) {
        out += "Dynamic values: " + *r.dynamic_value_setup + "\n\n";
    }
    for (std::size_t i = 0; i < r.reproduction_steps.size(); ++i) {
        out += std::to_string(i + 1) + ". Step " + std::to_string(i + 1) + "\n\n```\n" + r.reproduction_steps[i] + "\n```\n\n";
    }
    out += "## Remediation\n\n" + r.remediation.value_or("No remediation guidance was produced.") + "\n";
    return out;
}

std::string poc_to_json(const PoCReport& r) {
    json j{{"title", r.title},
           {"summary", r.summary},
           {"affected_components", r.affected_components},
           {"code_locations", r.code_locations},
           {"trigger", r.trigger},
           {"oracle_description", r.oracle_description},
           {"reproduction_steps", r.reproduction_steps},
           {"source_trace", r.source_trace}};
    if (r.dynamic_value_setup) {
        j["dynamic_value_setup"] = *r.dynamic_value_setup;
    }
    if (r.remediation) {
        j["remediation"] = *r.remediation;
    }
    return j.dump(2);
}

PoCReport parse_poc_json(std::string_view text) {
    try {
        auto j = json::parse(text);
        PoCReport r;
        r.title = j.at("title").get<std::string>();
        r.summary = j.value("summary", std::string());
        r.affected_components = j.value("affected_components", std::vector<std::string>{});
        if (j.contains("code_locations")) {
            r.code_locations = j.at("code_locations").get<std::vector<CodeSnippet>>();
        }
        r.trigger = j.value("trigger", std::string());
        r.oracle_description = j.value("oracle_description", std::string());
        r.reproduction_steps = j.at("reproduction_steps").get<std::vector<std::string>>();
        r.dynamic_value_setup = optional_field<std::string>(j, "dynamic_value_setup");
        r.remediation = optional_field<std::string>(j, "remediation");
        r.source_trace = j.value("source_trace", std::string());
        return r;
    } catch (const json::exception& e) {
        throw PocError(std::string("malformed PoC JSON: ") + e.what());
    }
}

ReplayOutcome replay_poc_detailed(const PoCReport& report, ExecutionEnvironment& env, const OracleSpec& oracle,
                                  EvidenceSources sources, const Variables& seeds) {
    ReplayOutcome out;
    out.trace.run_id = (report.source_trace.empty() ? std::string("poc") : report.source_trace) + "-replay";
    Variables vars = seeds;
    auto fail = [&](std::size_t i, const std::string& why) {
        out.failed_step = static_cast<int>(i + 1);
        out.diagnostics = "step " + std::to_string(i + 1) + ": " + why;
        out.verdict.status = VerdictStatus::failure;
        out.verdict.oracle_id = oracle.oracle_id;
        out.verdict.kind = oracle.kind;
        out.verdict.evidence = out.diagnostics;
        out.verdict.checked_at = now_iso8601();
        return out;
    };
    if (report.reproduction_steps.empty()) {
        return fail(0, "report has no reproduction steps");
    }
    for (std::size_t i = 0; i < report.reproduction_steps.size(); ++i) {
        Action action;
        try {
            action = parse_action(report.reproduction_steps[i]);
        } catch (const std::invalid_argument& e) {
            return fail(i, std::string("unparsable step: ") + e.what());
        }
        auto o = run_action(env, action, vars, out.trace);
        if (!o.ok) {
            return fail(i, o.command ? "command exited with status " + std::to_string(o.command->exit_code)
                                     : (o.error.empty() ? "no response" : o.error));
        }
        if (!o.missing_extracts.empty()) {
            return fail(i, "could not extract " + join(o.missing_extracts, ", "));
        }
    }
    sources.trace = &out.trace;
    out.verdict = evaluate_oracle(oracle, sources);
    out.success = out.verdict.succeeded();
    out.diagnostics = out.verdict.evidence;
    return out;
}

bool replay_poc(const PoCReport& report, ExecutionEnvironment& env, const OracleSpec& oracle, EvidenceSources sources,
                const Variables& seeds) {
    return replay_poc_detailed(report, env, oracle, std::move(sources), seeds).success;
}

} // namespace vulnval
