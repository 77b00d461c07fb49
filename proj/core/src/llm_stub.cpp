#include "vulnval/llm_stub.hpp"

#include "vulnval/errors.hpp"
#include "vulnval/util.hpp"

#include "json_io.hpp"

#include <stdexcept>

namespace vulnval {

const std::string* Script::find(std::string_view role, int turn) const {
    auto it = replies.find({std::string(role), turn});
    return it == replies.end() ? nullptr : &it->second;
}

Script parse_script(std::string_view text) {
    Script script;
    std::optional<std::pair<std::string, int>> key;
    std::vector<std::string> body;
    bool in_preamble = true;

    auto flush = [&] {
        if (!key) {
            return;
        }
        while (!body.empty() && trim(body.back()).empty()) {
            body.pop_back();
        }
        script.replies[*key] = join(body, "\n");
        body.clear();
    };

    int line_no = 0;
    for (const auto& line : split_lines(text)) {
        ++line_no;
        if (line.rfind("=== ", 0) == 0) {
            flush();
            auto fields = split(trim(line.substr(4)), ' ');
            if (fields.size() != 2) {
                throw std::invalid_argument("script line " + std::to_string(line_no) + ": expected '=== <role> <turn>'");
            }
            parse_agent_role(fields[0]);
            int turn = 0;
            try {
                std::size_t used = 0;
                turn = std::stoi(fields[1], &used);
                if (used != fields[1].size() || turn < 0) {
                    throw std::invalid_argument("turn");
                }
            } catch (const std::exception&) {
                throw std::invalid_argument("script line " + std::to_string(line_no) + ": bad turn '" + fields[1] + "'");
            }
            key = std::pair{fields[0], turn};
            if (script.replies.count(*key)) {
                throw std::invalid_argument("script line " + std::to_string(line_no) + ": duplicate reply for " +
                                            fields[0] + " " + fields[1]);
            }
            in_preamble = false;
            continue;
        }
        if (in_preamble) {
            continue;
        }
        if (body.empty() && line.rfind("#", 0) == 0) {
            continue;
        }
        body.push_back(line);
    }
    flush();
    return script;
}

Script load_script(const std::filesystem::path& path) {
    try {
        return parse_script(read_file(path));
    } catch (const std::invalid_argument& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

std::string ScriptedBackend::do_complete(const Conversation&, AgentRole role, int turn) {
    const auto* reply = script_.find(to_string(role), turn);
    if (!reply) {
        throw CassetteMissError(std::string(to_string(role)), turn);
    }
    return *reply;
}

LlmStubServer::LlmStubServer(Script script) : script_(std::move(script)) {
    server_.route("POST", ".*", [this](const ServerRequest& req, ServerResponse& res) {
        auto role = req.header("X-Agent-Role");
        auto turn = req.header("X-Turn-Index");
        const std::string* reply = nullptr;
        if (role && turn) {
            try {
                reply = script_.find(*role, std::stoi(*turn));
            } catch (const std::exception&) {
                reply = nullptr;
            }
        }
        res.content_type = "application/json";
        if (!reply) {
            res.status = 404;
            res.body = json{{"error", {{"message", "no scripted reply for " + role.value_or("?") + " turn " +
                                                       turn.value_or("?")}}}}
                           .dump();
            return;
        }
        json body{{"id", "stub-" + *role + "-" + *turn},
                  {"object", "chat.completion"},
                  {"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", *reply}}},
                                {"finish_reason", "stop"}}}}};
        res.body = body.dump();
    });
}

LlmStubServer::~LlmStubServer() { stop(); }

int LlmStubServer::start(const std::string& host, int port) {
    host_ = host;
    port_ = server_.start(host, port);
    return port_;
}

void LlmStubServer::stop() { server_.stop(); }

std::string LlmStubServer::endpoint_url() const {
    return "http://" + host_ + ":" + std::to_string(port_) + "/v1/chat/completions";
}

} // namespace vulnval
