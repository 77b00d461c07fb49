#pragma once

#include "vulnval/http.hpp"
#include "vulnval/llm_backend.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <utility>

namespace vulnval {

/// Scripted assistant replies keyed by (role, 0-based turn). Text form:
///   === <role> <turn>
///   <reply lines>
/// Lines before the first header and lines starting with "#" directly after a
/// header are ignored; trailing blank lines of a reply are dropped.
struct Script {
    std::map<std::pair<std::string, int>, std::string> replies;

    const std::string* find(std::string_view role, int turn) const;
};

/// Throws std::invalid_argument with the line number on a malformed header or duplicate key.
Script parse_script(std::string_view text);
Script load_script(const std::filesystem::path& path);

/// In-process backend answering from a script; a missing turn raises CassetteMissError.
class ScriptedBackend : public LlmBackend {
public:
    explicit ScriptedBackend(Script script) : script_(std::move(script)) {}

protected:
    std::string do_complete(const Conversation& conversation, AgentRole role, int turn) override;

private:
    Script script_;
};

/// OpenAI-compatible chat-completions server answering from a script by the
/// X-Agent-Role and X-Turn-Index request headers. Used to record cassettes.
class LlmStubServer {
public:
    explicit LlmStubServer(Script script);
    ~LlmStubServer();

    int start(const std::string& host = "127.0.0.1", int port = 0);
    void stop();
    std::string endpoint_url() const;

private:
    Script script_;
    HttpServer server_;
    std::string host_ = "127.0.0.1";
    int port_ = 0;
};

} // namespace vulnval
