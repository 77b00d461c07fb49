#include "vulnval/agents.hpp"

#include "vulnval/assets.hpp"
#include "vulnval/errors.hpp"
#include "vulnval/util.hpp"

#include <cctype>
#include <regex>

namespace vulnval {

const char* const kEnvelopeReminder =
    "Your reply could not be parsed. Reply again with only the block in the required format.";

std::string_view to_string(Decision v) {
    switch (v) {
    case Decision::explore: return "EXPLORE";
    case Decision::execute: return "EXECUTE";
    case Decision::abort: return "ABORT";
    }
    return "?";
}

namespace {

// Lines of the first ``` fence holding `marker`, or all lines when there is none.
std::vector<std::string> reply_lines(std::string_view text, std::string_view marker) {
    auto lines = split_lines(text);
    std::vector<std::string> fence;
    bool inside = false;
    bool hit = false;
    for (const auto& line : lines) {
        if (trim(line).rfind("```", 0) == 0) {
            if (inside && hit) {
                return fence;
            }
            inside = !inside;
            fence.clear();
            hit = false;
            continue;
        }
        if (inside) {
            fence.push_back(line);
            hit = hit || trim(line).rfind(marker, 0) == 0;
        }
    }
    return lines;
}

bool has_prefix(const std::string& trimmed, std::string_view prefix) { return trimmed.rfind(prefix, 0) == 0; }

std::string after(const std::string& trimmed, std::string_view prefix) { return trim(trimmed.substr(prefix.size())); }

// Whitespace-separated words; double quotes group words and may contain \" escapes.
std::vector<std::string> split_args(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (quoted) {
            if (c == '\\' && i + 1 < s.size() && s[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
            any = true;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            if (any) {
                out.push_back(cur);
                cur.clear();
                any = false;
            }
        } else {
            cur += c;
            any = true;
        }
    }
    if (quoted) {
        throw EnvelopeError("unterminated quote in tool arguments");
    }
    if (any) {
        out.push_back(cur);
    }
    return out;
}

std::string strip_trailing_blank(std::vector<std::string> lines) {
    while (!lines.empty() && trim(lines.back()).empty()) {
        lines.pop_back();
    }
    return join(lines, "\n");
}

template <typename Parser>
auto complete_with_retry(LlmBackend& backend, Conversation& conversation, AgentRole role, Parser parse)
    -> decltype(parse(std::string_view{})) {
    auto reply = backend.complete(conversation, role);
    conversation.assistant(reply.content);
    try {
        return parse(reply.content);
    } catch (const EnvelopeError& first) {
        conversation.user(std::string(kEnvelopeReminder) + "\nProblem: " + first.what());
    }
    reply = backend.complete(conversation, role);
    conversation.assistant(reply.content);
    try {
        return parse(reply.content);
    } catch (const EnvelopeError& second) {
        throw EnvelopeError("malformed " + std::string(to_string(role)) + " reply after one retry: " + second.what());
    }
}

std::string loop_label(int loop_index) { return "[loop " + std::to_string(loop_index + 1) + "]"; }

std::string render_excerpt(const CodeSnippet& s) {
    std::string out = "--- " + s.file_path + ":" + std::to_string(s.line_start) + "-" + std::to_string(s.line_end) + "\n";
    int n = s.line_start;
    for (const auto& line : split_lines(s.text)) {
        out += std::to_string(n++) + "| " + line + "\n";
    }
    return out;
}

} // namespace

// --- envelope ---------------------------------------------------------------

AgentEnvelope parse_agent_envelope(std::string_view text) {
    auto lines = reply_lines(text, "DECISION:");
    std::size_t i = 0;
    while (i < lines.size() && !has_prefix(trim(lines[i]), "DECISION:")) {
        ++i;
    }
    if (i == lines.size()) {
        throw EnvelopeError("no DECISION line");
    }
    AgentEnvelope env;
    env.raw = std::string(text);
    const auto value = after(trim(lines[i]), "DECISION:");
    if (value == "EXPLORE") {
        env.decision = Decision::explore;
    } else if (value == "EXECUTE") {
        env.decision = Decision::execute;
    } else if (value == "ABORT") {
        env.decision = Decision::abort;
    } else {
        throw EnvelopeError("unknown decision '" + value + "' (expected EXPLORE, EXECUTE or ABORT)");
    }

    static const std::regex q_re(R"(^Q(\d+):\s*(.*)$)");
    static const std::regex step_re(R"(^STEP (\d+) \[(http|shell|write_file)\]:\s*(.*)$)");
    enum class Open { none, question, step, reason } open = Open::none;
    bool saw_plan = false;
    std::vector<std::vector<std::string>> step_lines;

    for (++i; i < lines.size(); ++i) {
        const auto& raw = lines[i];
        const auto t = trim(raw);
        std::smatch m;
        if (std::regex_match(t, m, q_re)) {
            env.questions.push_back(trim(m[2].str()));
            open = Open::question;
        } else if (has_prefix(t, "PLAN:")) {
            if (saw_plan) {
                throw EnvelopeError("more than one PLAN line");
            }
            saw_plan = true;
            env.plan.objective = after(t, "PLAN:");
            open = Open::none;
        } else if (std::regex_match(t, m, step_re)) {
            if (std::stoul(m[1].str()) != env.plan.steps.size() + 1) {
                throw EnvelopeError("plan steps must be numbered 1, 2, ... in order");
            }
            PlanStep step;
            step.action_kind = parse_action_kind(m[2].str());
            step.description = trim(m[3].str());
            env.plan.steps.push_back(step);
            step_lines.emplace_back();
            open = Open::step;
        } else if (has_prefix(t, "STEP ")) {
            throw EnvelopeError("malformed step line '" + t + "'");
        } else if (has_prefix(t, "REASON:")) {
            env.reason = after(t, "REASON:");
            open = Open::reason;
        } else if (has_prefix(t, "DECISION:")) {
            throw EnvelopeError("more than one DECISION line");
        } else if (open == Open::step) {
            if (has_prefix(t, "EXPECT:")) {
                env.plan.steps.back().expected_signal = after(t, "EXPECT:");
            } else {
                step_lines.back().push_back(raw);
            }
        } else if (t.empty()) {
            continue;
        } else if (open == Open::question) {
            env.questions.back() += " " + t;
        } else if (open == Open::reason) {
            env.reason += (env.reason.empty() ? "" : " ") + t;
        } else {
            throw EnvelopeError("unexpected line after DECISION: '" + t + "'");
        }
    }
    for (std::size_t s = 0; s < env.plan.steps.size(); ++s) {
        auto& step = env.plan.steps[s];
        auto body = strip_trailing_blank(step_lines[s]);
        step.payload = body.empty() ? step.description : step.description + "\n" + body;
    }

    const bool has_plan = saw_plan || !env.plan.steps.empty();
    switch (env.decision) {
    case Decision::explore:
        if (env.questions.empty() || has_plan || !env.reason.empty()) {
            throw EnvelopeError("decision/payload mismatch: EXPLORE needs Q<i> lines and nothing else");
        }
        break;
    case Decision::execute:
        if (env.plan.steps.empty() || !env.questions.empty() || !env.reason.empty()) {
            throw EnvelopeError("decision/payload mismatch: EXECUTE needs PLAN with at least one STEP");
        }
        try {
            validate_plan(env.plan);
        } catch (const std::invalid_argument& e) {
            throw EnvelopeError(std::string("decision/payload mismatch: ") + e.what());
        }
        break;
    case Decision::abort:
        if (env.reason.empty() || has_plan || !env.questions.empty()) {
            throw EnvelopeError("decision/payload mismatch: ABORT needs a REASON line and nothing else");
        }
        break;
    }
    return env;
}

AgentEnvelope request_envelope(LlmBackend& backend, Conversation& conversation, AgentRole role) {
    return complete_with_retry(backend, conversation, role, [](std::string_view t) { return parse_agent_envelope(t); });
}

// --- prompts ----------------------------------------------------------------

std::string prompt_template(std::string_view name) {
    auto asset = assets::find("prompts/" + std::string(name) + ".txt");
    if (!asset) {
        throw Error("missing prompt template '" + std::string(name) + "'");
    }
    return std::string(*asset);
}

std::string render_plan(const ExploitPlan& plan) {
    std::string out;
    if (!plan.objective.empty()) {
        out += "PLAN: " + plan.objective + "\n";
    }
    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
        const auto& s = plan.steps[i];
        auto lines = split_lines(s.payload);
        out += "STEP " + std::to_string(i + 1) + " [" + std::string(to_string(s.action_kind)) + "]: " + lines.front() + "\n";
        for (std::size_t l = 1; l < lines.size(); ++l) {
            out += lines[l] + "\n";
        }
        if (!s.expected_signal.empty()) {
            out += "  EXPECT: " + s.expected_signal + "\n";
        }
    }
    return out;
}

std::string render_context(const WorkingContext& context) {
    struct Section {
        ContextKind kind;
        const char* title;
    };
    static const Section sections[] = {
        {ContextKind::endpoint_inventory, "## Discovered endpoints"},
        {ContextKind::observation, "## Observations"},
        {ContextKind::qa, "## Answers from source exploration"},
        {ContextKind::failure_summary, "## Failed attempts"},
        {ContextKind::evaluator_feedback, "## Evaluator feedback"},
    };
    std::string out;
    for (const auto& section : sections) {
        auto entries = context.of_kind(section.kind);
        if (entries.empty()) {
            continue;
        }
        out += std::string("\n") + section.title + "\n";
        for (const auto* e : entries) {
            if (e->kind == ContextKind::qa) {
                out += loop_label(e->loop_index) + " Q: " + e->question.value_or("") + "\n";
                out += "A: " + e->body + (e->incomplete ? " (incomplete)" : "") + "\n";
            } else {
                out += loop_label(e->loop_index) + " " + e->body + "\n";
            }
            for (const auto& x : e->excerpts) {
                out += render_excerpt(x);
            }
        }
    }
    return out.empty() ? "\n(no context yet)\n" : out;
}

std::string strategist_prompt(const StrategistInput& in) {
    const auto& m = *in.manifest;
    std::string hint;
    if (!in.blackbox && m.hint) {
        hint = "\n## Vulnerability hint\nWeakness: " + m.hint->cwe_id + "\nLocation: " + m.hint->file_path + " lines " +
               std::to_string(m.hint->line_start) + "-" + std::to_string(m.hint->line_end) + "\n";
        if (m.hint->note) {
            hint += "Note: " + *m.hint->note + "\n";
        }
    }
    std::vector<std::string> vars{"TARGET"};
    vars.insert(vars.end(), in.variables.begin(), in.variables.end());
    return render_template(prompt_template("strategist_user"),
                           {{"target_id", m.target_id},
                            {"base_url", m.base_url},
                            {"attack_type", std::string(to_string(m.attack_type))},
                            {"objective", m.objective.value_or("demonstrate " + std::string(to_string(m.attack_type)))},
                            {"loop", std::to_string(in.loop_index + 1)},
                            {"max_attempts", std::to_string(in.max_attempts)},
                            {"questions_left", std::to_string(in.questions_left)},
                            {"variables", join(vars, ", ")},
                            {"hint", hint},
                            {"context", render_context(*in.context)}});
}

AgentEnvelope strategist_decide(const StrategistInput& input, LlmBackend& backend) {
    auto conversation = Conversation::start(prompt_template(input.blackbox ? "strategist_blackbox" : "strategist"));
    conversation.user(strategist_prompt(input));
    return request_envelope(backend, conversation, AgentRole::strategist);
}

// --- explorer ---------------------------------------------------------------

ExplorerReply parse_explorer_reply(std::string_view text) {
    static const std::regex cite_re(R"(^(.+):(\d+)(?:-(\d+))?$)");
    auto lines = reply_lines(text, "ANSWER:");
    ExplorerReply r;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        auto t = trim(lines[i]);
        if (has_prefix(t, "TOOL:")) {
            auto args = split_args(after(t, "TOOL:"));
            if (args.empty()) {
                throw EnvelopeError("TOOL line names no tool");
            }
            r.kind = ExplorerReply::Kind::tool;
            r.tool = args.front();
            r.args.assign(args.begin() + 1, args.end());
            const auto n = r.args.size();
            bool ok = (r.tool == "list_dir" && n <= 1) || (r.tool == "read_file" && (n == 1 || n == 2)) ||
                      (r.tool == "search_text" && (n == 1 || n == 2)) || (r.tool == "path_exists" && n == 1);
            if (!ok) {
                throw EnvelopeError("unknown tool or wrong arguments: '" + t + "'");
            }
            return r;
        }
        if (has_prefix(t, "ANSWER:")) {
            r.kind = ExplorerReply::Kind::answer;
            std::vector<std::string> body{after(t, "ANSWER:")};
            for (++i; i < lines.size(); ++i) {
                auto u = trim(lines[i]);
                std::smatch m;
                if (has_prefix(u, "CITE:")) {
                    auto spec = after(u, "CITE:");
                    if (!std::regex_match(spec, m, cite_re)) {
                        throw EnvelopeError("CITE expects <path>:<start>-<end>, got '" + spec + "'");
                    }
                    int a = std::stoi(m[2].str());
                    int b = m[3].matched ? std::stoi(m[3].str()) : a;
                    r.citations.emplace_back(trim(m[1].str()), a, b);
                } else if (r.citations.empty()) {
                    body.push_back(u);
                }
            }
            r.answer = trim(strip_trailing_blank(body));
            if (r.answer.empty()) {
                throw EnvelopeError("empty ANSWER");
            }
            return r;
        }
    }
    throw EnvelopeError("expected a TOOL or ANSWER line");
}

std::string run_source_tool(const SourceTree& tree, const std::string& tool, const std::vector<std::string>& args) {
    try {
        if (tool == "list_dir") {
            auto names = tree.list_dir(args.empty() ? "." : args[0]);
            return names.empty() ? "(empty directory)" : join(names, "\n");
        }
        if (tool == "path_exists") {
            return (tree.path_exists(args[0]) ? "exists: " : "does not exist: ") + args[0];
        }
        if (tool == "search_text") {
            auto hits = tree.search_text(args[0], args.size() > 1 ? args[1] : "");
            if (hits.empty()) {
                return "no matches for \"" + args[0] + "\"";
            }
            std::string out;
            for (const auto& h : hits) {
                out += h.file_path + ":" + std::to_string(h.line) + ": " + truncate_middle(trim(h.text), 200) + "\n";
            }
            return out;
        }
        if (tool == "read_file") {
            constexpr int kMaxLines = 200;
            auto lines = split_lines(tree.read_file(args[0]));
            int total = static_cast<int>(lines.size());
            int a = 1;
            int b = total;
            if (args.size() > 1) {
                static const std::regex range_re(R"(^(\d+)-(\d+)$)");
                std::smatch m;
                if (!std::regex_match(args[1], m, range_re)) {
                    return "error: range must be <start>-<end>";
                }
                a = std::max(1, std::stoi(m[1].str()));
                b = std::min(total, std::stoi(m[2].str()));
            }
            std::string out;
            int shown = 0;
            for (int n = a; n <= b && shown < kMaxLines; ++n, ++shown) {
                out += std::to_string(n) + "| " + lines[n - 1] + "\n";
            }
            if (a + shown <= b) {
                out += "... lines " + std::to_string(a + shown) + "-" + std::to_string(b) + " not shown; request a range\n";
            }
            return out.empty() ? "(no lines in range; file has " + std::to_string(total) + " lines)" : out;
        }
        return "error: unknown tool " + tool;
    } catch (const SourceError& e) {
        return std::string("error: ") + e.what();
    }
}

ContextEntry explorer_answer(const std::string& question, const SourceTree& tree, LlmBackend& backend, int tool_budget,
                             int loop_index) {
    auto conversation = Conversation::start(prompt_template("explorer"));
    conversation.user(render_template(prompt_template("explorer_user"),
                                      {{"question", question},
                                       {"budget", std::to_string(tool_budget)},
                                       {"listing", run_source_tool(tree, "list_dir", {"."})}}));
    ContextEntry entry;
    entry.loop_index = loop_index;
    entry.kind = ContextKind::qa;
    entry.question = question;

    int calls = 0;
    std::string last_result;
    while (true) {
        auto reply = complete_with_retry(backend, conversation, AgentRole::explorer,
                                         [](std::string_view t) { return parse_explorer_reply(t); });
        if (reply.kind == ExplorerReply::Kind::answer) {
            entry.body = reply.answer;
            for (const auto& [path, a, b] : reply.citations) {
                try {
                    entry.excerpts.push_back(tree.extract(path, a, b));
                } catch (const SourceError&) {
                    // an unresolvable citation is dropped; the summary still stands
                }
            }
            return entry;
        }
        if (calls == tool_budget) {
            entry.incomplete = true;
            entry.body = "tool budget of " + std::to_string(tool_budget) +
                         " calls exhausted before an answer; last result: " + truncate_middle(last_result, 1500);
            return entry;
        }
        ++calls;
        last_result = run_source_tool(tree, reply.tool, reply.args);
        conversation.user("RESULT (" + std::to_string(calls) + " of " + std::to_string(tool_budget) + "):\n" + last_result);
    }
}

// --- exploiter --------------------------------------------------------------

ExploiterReply parse_exploiter_reply(std::string_view text) {
    auto lines = reply_lines(text, "");
    ExploiterReply r;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        auto t = trim(lines[i]);
        if (has_prefix(t, "ACTION:")) {
            std::vector<std::string> rest;
            if (auto inline_part = after(t, "ACTION:"); !inline_part.empty()) {
                rest.push_back(inline_part);
            }
            rest.insert(rest.end(), lines.begin() + static_cast<long>(i) + 1, lines.end());
            r.kind = ExploiterReply::Kind::action;
            try {
                r.action = parse_action(strip_trailing_blank(rest));
            } catch (const std::invalid_argument& e) {
                throw EnvelopeError(std::string("malformed action: ") + e.what());
            }
            return r;
        }
        if (has_prefix(t, "OUTCOME:")) {
            auto verdict = to_lower(after(t, "OUTCOME:"));
            if (verdict != "success" && verdict != "failure") {
                throw EnvelopeError("OUTCOME must be SUCCESS or FAILURE");
            }
            r.kind = ExploiterReply::Kind::outcome;
            r.success = verdict == "success";
            std::string* open = nullptr;
            for (++i; i < lines.size(); ++i) {
                auto u = trim(lines[i]);
                if (has_prefix(u, "OBSERVATION:")) {
                    r.observations.push_back(after(u, "OBSERVATION:"));
                    open = &r.observations.back();
                } else if (has_prefix(u, "ANALYSIS:")) {
                    r.analysis = after(u, "ANALYSIS:");
                    open = &r.analysis;
                } else if (!u.empty() && open) {
                    *open += " " + u;
                }
            }
            return r;
        }
    }
    throw EnvelopeError("expected an ACTION or OUTCOME block");
}

namespace {

std::string describe_failure(const ActionOutcome& o, int step) {
    std::string where = "interaction " + std::to_string(step) + ": ";
    if (o.command) {
        auto msg = where + "command exited with status " + std::to_string(o.command->exit_code);
        auto err = split_lines(trim(o.command->stderr_text));
        if (!err.empty()) {
            msg += " (" + truncate_middle(err.front(), 160) + ")";
        }
        return msg;
    }
    return where + (o.error.empty() ? "no response" : o.error);
}

} // namespace

ExploiterResult exploiter_run(const ExploitPlan& plan, ExecutionEnvironment& env, LlmBackend& backend, int step_budget,
                              const Variables& seed_variables, std::string run_id, std::size_t observation_limit) {
    if (!env.alive()) {
        throw EnvironmentError("execution environment " + env.env_id() + " is not alive");
    }
    ExploiterResult result;
    result.trace.run_id = std::move(run_id);
    result.summary.trace_ref = result.trace.run_id;
    result.variables = seed_variables;

    std::vector<std::string> names;
    for (const auto& [k, v] : seed_variables) {
        names.push_back(k);
    }
    auto conversation = Conversation::start(prompt_template("exploiter"));
    conversation.user(render_template(prompt_template("exploiter_user"),
                                      {{"objective", plan.objective.empty() ? "carry out the plan" : plan.objective},
                                       {"budget", std::to_string(step_budget)},
                                       {"variables", join(names, ", ")},
                                       {"plan", render_plan(plan)}}));

    int used = 0;
    std::optional<ActionOutcome> last;
    auto& summary = result.summary;
    while (true) {
        auto reply = complete_with_retry(backend, conversation, AgentRole::exploiter,
                                         [](std::string_view t) { return parse_exploiter_reply(t); });
        if (reply.kind == ExploiterReply::Kind::outcome) {
            summary.observations = reply.observations;
            if (reply.success && used == 0) {
                summary.failure_analysis = "no interaction was performed";
            } else if (reply.success && last && !last->ok) {
                summary.failure_analysis = describe_failure(*last, used);
            } else if (reply.success) {
                summary.succeeded_locally = true;
            } else if (!reply.analysis.empty()) {
                summary.failure_analysis = reply.analysis;
            } else if (last && !last->ok) {
                summary.failure_analysis = describe_failure(*last, used);
            } else {
                summary.failure_analysis = "the exploiter reported failure without an analysis";
            }
            break;
        }
        if (used == step_budget) {
            summary.failure_analysis = "step budget of " + std::to_string(step_budget) +
                                       " interactions exhausted before the plan completed";
            break;
        }
        ++used;
        const auto before = result.variables;
        auto outcome = run_action(env, reply.action, result.variables, result.trace);
        result.actions.emplace_back(reply.action, outcome.ok);
        std::string observation = render_observation(outcome, std::size_t{1} << 20);
        for (const auto& [k, v] : result.variables) {
            auto it = before.find(k);
            if (it == before.end() || it->second != v) {
                observation += "extracted " + k + " = " + truncate_middle(v, 200) + "\n";
            }
        }
        observation = summarize_output(observation, backend, observation_limit);
        conversation.user("OBSERVATION (interaction " + std::to_string(used) + " of " + std::to_string(step_budget) +
                          "):\n" + observation);
        last = std::move(outcome);
    }
    return result;
}

// --- summarizer -------------------------------------------------------------

std::string summarize_output(const std::string& raw, LlmBackend& backend, std::size_t max_length) {
    if (raw.size() <= max_length) {
        return raw;
    }
    try {
        auto conversation = Conversation::start(prompt_template("summarizer"));
        conversation.user(render_template(prompt_template("summarizer_user"),
                                          {{"max_length", std::to_string(max_length)}, {"raw", raw}}));
        auto reply = trim(backend.complete(conversation, AgentRole::summarizer).content);
        if (!reply.empty() && reply.size() <= max_length) {
            return reply;
        }
    } catch (const BackendError&) {
        // fall through to truncation
    }
    return truncate_middle(raw, max_length);
}

} // namespace vulnval
