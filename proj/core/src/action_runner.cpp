#include "vulnval/action_runner.hpp"

#include "vulnval/errors.hpp"
#include "vulnval/util.hpp"

#include <regex>

namespace vulnval {

Action expand_action(const Action& action, const Variables& vars) {
    Action out = action;
    auto x = [&](const std::string& s) { return expand_placeholders(s, vars); };
    out.url = x(action.url);
    if (!out.url.empty() && out.url.front() == '/') {
        if (auto it = vars.find("TARGET"); it != vars.end()) {
            out.url = it->second + out.url;
        }
    }
    for (auto& [k, v] : out.headers) {
        v = x(v);
    }
    out.body = x(action.body);
    out.command = x(action.command);
    out.path = x(action.path);
    out.content = x(action.content);
    return out;
}

std::string render_http_request(const Action& a) {
    std::string out = a.method + " " + a.url + "\n";
    for (const auto& [k, v] : a.headers) {
        out += k + ": " + v + "\n";
    }
    out += "\n" + a.body;
    return out;
}

std::string render_http_response(const HttpResponse& r) {
    std::string out = "HTTP " + std::to_string(r.status) + "\n";
    for (const auto& [k, v] : r.headers) {
        out += k + ": " + v + "\n";
    }
    out += "\n" + r.body;
    return out;
}

std::string render_observation(const ActionOutcome& o, std::size_t max_body) {
    std::string out;
    if (o.response) {
        out += "HTTP " + std::to_string(o.response->status) + "\n";
        for (const auto& [k, v] : o.response->headers) {
            auto lk = to_lower(k);
            if (lk == "content-type" || lk == "location" || lk == "set-cookie") {
                out += k + ": " + v + "\n";
            }
        }
        out += "\n" + truncate_middle(o.response->body, max_body);
    } else if (o.command) {
        out += "exit code " + std::to_string(o.command->exit_code) + (o.command->timed_out ? " (timed out)" : "") + "\n";
        out += "stdout:\n" + truncate_middle(o.command->stdout_text, max_body) + "\n";
        if (!o.command->stderr_text.empty()) {
            out += "stderr:\n" + truncate_middle(o.command->stderr_text, max_body) + "\n";
        }
    }
    if (!o.error.empty()) {
        out += "error: " + o.error + "\n";
    }
    for (const auto& name : o.missing_extracts) {
        out += "extract " + name + ": no match\n";
    }
    return out;
}

namespace {

void apply_extracts(ActionOutcome& o, Variables& vars) {
    for (const auto& ex : o.expanded.extracts) {
        std::string source;
        if (ex.source == "body" && o.response) {
            source = o.response->body;
        } else if (ex.source == "stdout" && o.command) {
            source = o.command->stdout_text;
        } else if (ex.source == "body" && o.command) {
            source = o.command->stdout_text;
        } else if (ex.source.rfind("header:", 0) == 0 && o.response) {
            source = join(find_headers(o.response->headers, ex.source.substr(7)), "\n");
        }
        std::smatch m;
        bool matched = false;
        try {
            matched = std::regex_search(source, m, std::regex(ex.pattern));
        } catch (const std::regex_error& e) {
            o.error += (o.error.empty() ? "" : "; ") + std::string("bad EXTRACT regex for ") + ex.name + ": " + e.what();
        }
        if (matched) {
            vars[ex.name] = m.size() > 1 ? m[1].str() : m[0].str();
        } else {
            o.missing_extracts.push_back(ex.name);
        }
    }
}

} // namespace

ActionOutcome run_action(ExecutionEnvironment& env, const Action& action, Variables& vars, ExecutionTrace& trace) {
    ActionOutcome o;
    o.expanded = expand_action(action, vars);
    trace.append(TraceKind::note, "action:\n" + render_action(action));
    const auto& a = o.expanded;
    switch (a.kind) {
    case ActionKind::http: {
        trace.append(TraceKind::http_request, render_http_request(a));
        try {
            o.response = env.http_request(a.method, a.url, a.headers, a.body);
            trace.append(TraceKind::http_response, render_http_response(*o.response));
            o.ok = true;
        } catch (const PolicyError& e) {
            o.error = std::string("policy: ") + e.what();
            trace.append(TraceKind::note, "request not sent: " + o.error);
        } catch (const NetworkError& e) {
            o.error = std::string("network: ") + e.what();
            trace.append(TraceKind::note, "request failed: " + o.error);
        }
        break;
    }
    case ActionKind::shell: {
        CommandResult r;
        try {
            r = env.exec_command(a.command);
        } catch (const PolicyError& e) {
            r.exit_code = 126;
            r.stderr_text = std::string("policy: ") + e.what() + "\n";
            o.error = r.stderr_text.substr(0, r.stderr_text.size() - 1);
        }
        trace.append(TraceKind::command, a.command, r.exit_code);
        trace.append(TraceKind::stdout_text, r.stdout_text);
        if (!r.stderr_text.empty()) {
            trace.append(TraceKind::stderr_text, r.stderr_text);
        }
        o.ok = r.exit_code == 0;
        o.command = std::move(r);
        break;
    }
    case ActionKind::write_file: {
        CommandResult r;
        try {
            env.write_file(a.path, a.content);
            r.stdout_text = "wrote " + std::to_string(a.content.size()) + " bytes to " + a.path + "\n";
        } catch (const PolicyError& e) {
            r.exit_code = 126;
            r.stderr_text = std::string("policy: ") + e.what() + "\n";
            o.error = r.stderr_text.substr(0, r.stderr_text.size() - 1);
        }
        trace.append(TraceKind::command, "write_file " + a.path, r.exit_code);
        trace.append(TraceKind::stdout_text, r.stdout_text);
        if (!r.stderr_text.empty()) {
            trace.append(TraceKind::stderr_text, r.stderr_text);
        }
        o.ok = r.exit_code == 0;
        o.command = std::move(r);
        break;
    }
    }
    apply_extracts(o, vars);
    return o;
}

} // namespace vulnval
