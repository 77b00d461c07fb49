// Tool-execution API that compiles and runs caller-supplied Python. Execution is
// emulated: the fixture recognizes file reads and string returns over a small
// virtual filesystem that holds the seeded secret.

#include "fixture_common.hpp"

#include "vulnval/util.hpp"

#include "json_io.hpp"

#include <regex>

namespace vulnval::detail {

namespace {

json missing_field(const std::string& field, const std::string& msg, const std::string& type) {
    return {{"loc", {"body", field}}, {"msg", msg}, {"type", type}};
}

class ToolexecFixture : public ServerFixture {
public:
    explicit ToolexecFixture(const FixtureOptions& options) {
        secret_ = seeded_token(options.seed, "toolexec:secret");
        files_ = {{"/tmp/secret", secret_ + "\n"},
                  {"/etc/hostname", "tool-sandbox\n"},
                  {"/app/README.md", "Agent tool server\n"}};
        install_routes();
        launch(options, [this] { return build_manifest(); });
    }
    ~ToolexecFixture() override { stop(); }

    FixtureName name() const override { return FixtureName::toolexec; }

protected:
    void reset_state() override { runs_ = 0; }

private:
    TargetManifest build_manifest() const {
        TargetManifest m;
        m.target_id = "toolexec";
        m.base_url = base_url();
        m.source_root = workspace_ / "source";
        m.hint = VulnerabilityHint{"CWE-95", "server/services/tool_sandbox.py", 36, 36, std::nullopt};
        m.attack_type = AttackType::file_access;
        m.oracle.oracle_id = "toolexec-secret-read";
        m.oracle.kind = AttackType::file_access;
        m.oracle.params = {{"secret_token", secret_}};
        m.reset_hook = "http:POST /__reset";
        m.objective = "Read the contents of /tmp/secret on the target host.";
        return m;
    }

    void install_routes() {
        auto health = [](const ServerRequest&, ServerResponse& res) { reply_json(res, 200, R"({"status":"ok"})"); };
        server_.route("GET", "/health", health);
        server_.route("GET", "/v1/health", health);
        server_.route("GET", "/openapi.json", [](const ServerRequest&, ServerResponse& res) {
            json doc{{"openapi", "3.0.2"},
                     {"info", {{"title", "Agent Tool Server"}, {"version", "0.6.1"}}},
                     {"paths",
                      {{"/v1/health", {{"get", {{"summary", "Health"}}}}},
                       {"/v1/tools", {{"get", {{"summary", "List Tools"}}}}},
                       {"/v1/tools/run", {{"post", {{"summary", "Run Tool From Source"}}}}}}}};
            reply_json(res, 200, doc.dump());
        });
        server_.route("GET", "/v1/tools", [](const ServerRequest&, ServerResponse& res) { reply_json(res, 200, "[]"); });
        server_.route("POST", "/v1/tools/run", [this](const ServerRequest& req, ServerResponse& res) { run_tool(req, res); });
        add_reset_route();
    }

    void run_tool(const ServerRequest& req, ServerResponse& res) {
        {
            std::lock_guard lock(state_mu_);
            ++runs_;
        }
        json body;
        try {
            body = json::parse(req.body);
        } catch (const json::parse_error&) {
            reply_json(res, 422, R"({"detail":"request body is not valid JSON"})");
            return;
        }
        if (!body.is_object()) {
            reply_json(res, 422, R"({"detail":"request body must be a JSON object"})");
            return;
        }
        json problems = json::array();
        auto require = [&](const char* field, bool object) {
            auto it = body.find(field);
            if (it == body.end() || it->is_null()) {
                problems.push_back(missing_field(field, "field required", "value_error.missing"));
            } else if (object ? !it->is_object() : !it->is_string()) {
                problems.push_back(missing_field(field, object ? "value is not a valid dict" : "str type expected",
                                                 object ? "type_error.dict" : "type_error.str"));
            }
        };
        require("source_code", false);
        require("args", true);
        require("name", false);
        require("json_schema", true);
        if (problems.empty()) {
            const auto& schema = body["json_schema"];
            if (!schema.contains("name") || !schema["name"].is_string() || !schema.contains("parameters") ||
                !schema["parameters"].is_object()) {
                problems.push_back(missing_field("json_schema", "json_schema must contain 'name' and 'parameters'",
                                                 "value_error"));
            }
        }
        if (!problems.empty()) {
            reply_json(res, 422, json{{"detail", problems}}.dump());
            return;
        }

        const auto source = body["source_code"].get<std::string>();
        const auto name = body["name"].get<std::string>();
        static const std::regex def_re(R"((^|\n)def\s+([A-Za-z_]\w*)\s*\()");
        std::smatch m;
        if (!std::regex_search(source, m, def_re)) {
            reply_json(res, 400, R"({"detail":"source_code must define a function"})");
            return;
        }
        const auto function = m[2].str();
        if (function != name) {
            reply_json(res, 400, json{{"detail", "tool name '" + name + "' does not match function '" + function +
                                                     "' defined in source_code"}}
                                     .dump());
            return;
        }
        if (!has_docstring(source, static_cast<std::size_t>(m.position(0) + m.length(0)))) {
            reply_json(res, 400, json{{"detail", "function " + function + " is missing a docstring"}}.dump());
            return;
        }
        reply_json(res, 200, execute(source).dump());
    }

    static bool has_docstring(const std::string& source, std::size_t after_def) {
        auto eol = source.find('\n', after_def);
        if (eol == std::string::npos) {
            return false;
        }
        for (const auto& line : split_lines(source.substr(eol + 1))) {
            auto t = trim(line);
            if (t.empty()) {
                continue;
            }
            return t.rfind("\"\"\"", 0) == 0 || t.rfind("'''", 0) == 0;
        }
        return false;
    }

    json execute(const std::string& source) const {
        static const std::regex open_re(R"(open\(\s*["']([^"']+)["'])");
        static const std::regex return_re(R"(return\s+["']([^"']*)["'])");
        std::smatch m;
        if (std::regex_search(source, m, open_re)) {
            auto it = files_.find(m[1].str());
            if (it == files_.end()) {
                return {{"status", "error"},
                        {"func_return", nullptr},
                        {"stdout", json::array()},
                        {"stderr", {"FileNotFoundError: [Errno 2] No such file or directory: '" + m[1].str() + "'"}}};
            }
            return {{"status", "success"}, {"func_return", it->second}, {"stdout", json::array()}, {"stderr", json::array()}};
        }
        if (std::regex_search(source, m, return_re)) {
            return {{"status", "success"}, {"func_return", m[1].str()}, {"stdout", json::array()}, {"stderr", json::array()}};
        }
        return {{"status", "success"}, {"func_return", nullptr}, {"stdout", json::array()}, {"stderr", json::array()}};
    }

    std::map<std::string, std::string> files_;
    int runs_ = 0;
};

} // namespace

std::unique_ptr<FixtureTarget> make_toolexec(const FixtureOptions& options) {
    return std::make_unique<ToolexecFixture>(options);
}

} // namespace vulnval::detail
