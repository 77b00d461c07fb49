// Report server with two flaws: the download handler joins an unchecked name onto
// the report directory, and the webhook tester fetches any http(s) URL. The
// variant picks which one the manifest targets.

#include "fixture_common.hpp"

#include "vulnval/errors.hpp"
#include "vulnval/util.hpp"

#include "json_io.hpp"

#include <vector>

namespace vulnval::detail {

namespace {

constexpr const char* kReportDir = "/srv/app/data/reports";

// os.path.join followed by normpath over a POSIX path.
std::string join_normalized(const std::string& base, const std::string& name) {
    std::string joined = !name.empty() && name[0] == '/' ? name : base + "/" + name;
    std::vector<std::string> parts;
    for (const auto& seg : split(joined, '/')) {
        if (seg.empty() || seg == ".") {
            continue;
        }
        if (seg == "..") {
            if (!parts.empty()) {
                parts.pop_back();
            }
            continue;
        }
        parts.push_back(seg);
    }
    return "/" + join(parts, "/");
}

class FileserveFixture : public ServerFixture {
public:
    explicit FileserveFixture(const FixtureOptions& options) : outbound_(options.variant == "outbound_service") {
        if (options.variant != "file_access" && options.variant != "outbound_service") {
            throw FixtureError("unknown fileserve variant '" + options.variant +
                               "' (expected file_access or outbound_service)");
        }
        secret_ = outbound_ ? seeded_token(options.seed, "fileserve:listener") : seeded_token(options.seed, "fileserve:secret");
        const auto key = seeded_token(options.seed, "fileserve:secret");
        files_ = {{std::string(kReportDir) + "/q1-summary.txt", "Q1 revenue summary\nregion,total\nnorth,1200\n"},
                  {std::string(kReportDir) + "/q2-summary.txt", "Q2 revenue summary\nregion,total\nnorth,1350\n"},
                  {"/srv/app/config/secret.key", key + "\n"},
                  {"/etc/hostname", "fileserve\n"},
                  {"/etc/passwd", "root:x:0:0:root:/root:/bin/sh\napp:x:1000:1000::/srv/app:/bin/sh\n"}};
        install_routes();
        launch(options, [this] { return build_manifest(); });
    }
    ~FileserveFixture() override { stop(); }

    FixtureName name() const override { return FixtureName::fileserve; }

protected:
    void reset_state() override { deliveries_ = 0; }

private:
    TargetManifest build_manifest() const {
        TargetManifest m;
        m.target_id = outbound_ ? "fileserve-outbound" : "fileserve";
        m.base_url = base_url();
        m.source_root = workspace_ / "source";
        m.reset_hook = "http:POST /__reset";
        if (outbound_) {
            m.hint = VulnerabilityHint{"CWE-918", "app/routes/webhooks.py", 16, 16, std::nullopt};
            m.attack_type = AttackType::outbound_service;
            m.oracle.oracle_id = "fileserve-callback";
            m.oracle.kind = AttackType::outbound_service;
            m.oracle.params = {{"listener_token", secret_}};
            m.objective = "Make the target server send an HTTP request to the callback URL.";
        } else {
            m.hint = VulnerabilityHint{"CWE-22", "app/routes/reports.py", 22, 22, std::nullopt};
            m.attack_type = AttackType::file_access;
            m.oracle.oracle_id = "fileserve-secret-key";
            m.oracle.kind = AttackType::file_access;
            m.oracle.params = {{"secret_token", seeded_token(seed_, "fileserve:secret")}};
            m.objective = "Read the signing key stored at /srv/app/config/secret.key.";
        }
        return m;
    }

    void install_routes() {
        server_.route("GET", "/health", [](const ServerRequest&, ServerResponse& res) { reply_json(res, 200, R"({"status":"ok"})"); });
        server_.route("GET", "/reports", [this](const ServerRequest&, ServerResponse& res) {
            json names = json::array();
            const std::string prefix = std::string(kReportDir) + "/";
            for (const auto& [path, body] : files_) {
                if (path.rfind(prefix, 0) == 0) {
                    names.push_back(path.substr(prefix.size()));
                }
            }
            reply_json(res, 200, json{{"reports", names}}.dump());
        });
        server_.route("GET", "/download", [this](const ServerRequest& req, ServerResponse& res) {
            auto name = req.param("file").value_or("");
            if (name.empty()) {
                res.status = 400;
                res.body = "missing file parameter\n";
                return;
            }
            auto it = files_.find(join_normalized(kReportDir, name));
            if (it == files_.end()) {
                res.status = 404;
                res.body = "not found\n";
                return;
            }
            res.content_type = "application/octet-stream";
            res.body = it->second;
        });
        server_.route("POST", "/webhooks/test", [this](const ServerRequest& req, ServerResponse& res) { test_webhook(req, res); });
        add_reset_route();
    }

    void test_webhook(const ServerRequest& req, ServerResponse& res) {
        std::string url;
        try {
            auto payload = json::parse(req.body);
            if (payload.is_object() && payload.contains("url") && payload["url"].is_string()) {
                url = payload["url"].get<std::string>();
            }
        } catch (const json::parse_error&) {
        }
        if (url.rfind("http://", 0) != 0 && url.rfind("https://", 0) != 0) {
            reply_json(res, 400, R"j({"error":"url must be http(s)"})j");
            return;
        }
        {
            std::lock_guard lock(state_mu_);
            ++deliveries_;
        }
        HttpRequestSpec out;
        out.url = url;
        out.timeout = std::chrono::seconds(3);
        out.headers = {{"User-Agent", "python-requests/2.31.0"}};
        try {
            auto r = http_send(out);
            reply_json(res, 200, json{{"delivered", true}, {"status", r.status}}.dump());
        } catch (const std::exception&) {
            // an unhandled requests exception surfaces as a bare 500
            res.status = 500;
            res.content_type = "text/html; charset=utf-8";
            res.body = "<h1>Internal Server Error</h1>\n";
        }
    }

    bool outbound_;
    std::map<std::string, std::string> files_;
    int deliveries_ = 0;
};

} // namespace

std::unique_ptr<FixtureTarget> make_fileserve(const FixtureOptions& options) {
    return std::make_unique<FileserveFixture>(options);
}

} // namespace vulnval::detail
