#pragma once

#include "vulnval/domain.hpp"
#include "vulnval/http.hpp"
#include "vulnval/sandbox.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace vulnval {

using Variables = std::map<std::string, std::string>;

struct ActionOutcome {
    /// http: a response arrived; shell: exit code 0; write_file: file written.
    bool ok = false;
    Action expanded;
    std::optional<HttpResponse> response;
    std::optional<CommandResult> command;
    std::string error;
    std::vector<std::string> missing_extracts;
};

/// Substitutes `{{name}}` placeholders in every field; relative request URLs are joined to {{TARGET}}.
Action expand_action(const Action& action, const Variables& vars);

/// Performs one interaction against the environment, records it in the trace
/// (template note, then command/stdout/stderr or http_request/http_response) and
/// stores extracted values into `vars`.
ActionOutcome run_action(ExecutionEnvironment& env, const Action& action, Variables& vars, ExecutionTrace& trace);

std::string render_http_request(const Action& expanded);
std::string render_http_response(const HttpResponse& response);

/// Compact view of an outcome for prompts: status line, Content-Type/Location/Set-Cookie, body.
std::string render_observation(const ActionOutcome& outcome, std::size_t max_body = 4000);

} // namespace vulnval
