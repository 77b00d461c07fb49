// Registration form whose handler trusts a client-supplied role once the form
// marker and action nonce are present.

#include "fixture_common.hpp"

#include "vulnval/util.hpp"

#include <set>
#include <vector>

namespace vulnval::detail {

namespace {

struct User {
    std::string login;
    std::string email;
    std::string role;
    bool seeded = false;
};

const std::set<std::string>& known_roles() {
    static const std::set<std::string> roles{"subscriber", "contributor", "author", "editor", "administrator"};
    return roles;
}

class RegroleFixture : public ServerFixture {
public:
    explicit RegroleFixture(const FixtureOptions& options) {
        nonce_ = seeded_token(options.seed, "fp_registration_action", 10);
        secret_ = seeded_token(options.seed, "regrole:secret");
        reset_state();
        install_routes();
        launch(options, [this] { return build_manifest(); });
    }
    ~RegroleFixture() override { stop(); }

    FixtureName name() const override { return FixtureName::regrole; }

protected:
    void reset_state() override {
        users_ = {{"siteadmin", "admin@example.test", "administrator", true}};
        sessions_.clear();
    }

private:
    TargetManifest build_manifest() const {
        TargetManifest m;
        m.target_id = "regrole";
        m.base_url = base_url();
        m.source_root = workspace_ / "source";
        m.hint = VulnerabilityHint{"CWE-269", "includes/class-frontend-registration.php", 77, 88, std::nullopt};
        m.attack_type = AttackType::privilege_escalation;
        m.oracle.oracle_id = "regrole-admin-principal";
        m.oracle.kind = AttackType::privilege_escalation;
        m.oracle.params = {{"probe_request", "GET /__probe/users"}, {"admin_marker", "role=administrator"}};
        m.reset_hook = "http:POST /__reset";
        m.objective = "Obtain administrator privileges on the site starting as an unauthenticated visitor.";
        return m;
    }

    std::string page(const std::string& title, const std::string& body) const {
        return "<!doctype html>\n<html><head><title>" + title + "</title></head>\n<body>\n<h1>" + title + "</h1>\n" +
               body + "</body></html>\n";
    }

    std::string registration_form(const std::string& notice) const {
        std::string body;
        if (!notice.empty()) {
            body += "<div class=\"fp-notice\">" + html_escape(notice) + "</div>\n";
        }
        body += "<form method=\"post\" action=\"/register\" class=\"fp-registration\">\n"
                "<input type=\"hidden\" name=\"fp_registration\" value=\"1\" />\n"
                "<input type=\"hidden\" id=\"_wpnonce\" name=\"_wpnonce\" value=\"" +
                nonce_ +
                "\" />\n"
                "<input type=\"text\" name=\"user_login\" />\n"
                "<input type=\"email\" name=\"user_email\" />\n"
                "<input type=\"password\" name=\"user_pass\" />\n"
                "<button type=\"submit\">Register</button>\n"
                "</form>\n";
        return page("Register", body);
    }

    static void html(ServerResponse& res, std::string body) {
        res.content_type = "text/html; charset=utf-8";
        res.body = std::move(body);
    }

    void install_routes() {
        server_.route("GET", "/health", [](const ServerRequest&, ServerResponse& res) { res.body = "ok\n"; });
        server_.route("GET", "/", [this](const ServerRequest&, ServerResponse& res) {
            html(res, page("Frontend Profile", "<a href=\"/register\">Register</a> <a href=\"/login\">Log in</a>\n"));
        });
        server_.route("GET", "/register", [this](const ServerRequest& req, ServerResponse& res) {
            if (auto user = session_user(req)) {
                html(res, page("Register", "<p class=\"fp-logged-in\">You are logged in as " + html_escape(*user) +
                                               ".</p>\n"));
                return;
            }
            html(res, registration_form(""));
        });
        server_.route("POST", "/register", [this](const ServerRequest& req, ServerResponse& res) { handle_register(req, res); });
        server_.route("GET", "/login", [this](const ServerRequest&, ServerResponse& res) {
            html(res, page("Log in", "<form method=\"post\" action=\"/login\">\n<input type=\"text\" name=\"log\" />\n"
                                     "<input type=\"password\" name=\"pwd\" />\n</form>\n"));
        });
        server_.route("GET", "/profile", [this](const ServerRequest& req, ServerResponse& res) {
            auto user = session_user(req);
            if (!user) {
                res.status = 302;
                res.set_header("Location", "/login");
                return;
            }
            std::lock_guard lock(state_mu_);
            for (const auto& u : users_) {
                if (u.login == *user) {
                    html(res, page("Profile", "<p>Logged in as " + html_escape(u.login) + "</p>\n"));
                }
            }
        });
        server_.route("GET", "/__probe/users", [this](const ServerRequest& req, ServerResponse& res) {
            if (!req.from_loopback()) {
                res.status = 403;
                res.body = "forbidden\n";
                return;
            }
            std::lock_guard lock(state_mu_);
            std::string out;
            for (const auto& u : users_) {
                if (!u.seeded) {
                    out += "user=" + u.login + " role=" + u.role + "\n";
                }
            }
            res.body = out.empty() ? "no users\n" : out;
        });
        add_reset_route();
    }

    std::optional<std::string> session_user(const ServerRequest& req) const {
        auto cookie = req.header("Cookie");
        if (!cookie) {
            return std::nullopt;
        }
        std::lock_guard lock(state_mu_);
        for (const auto& part : split(*cookie, ';')) {
            auto kv = trim(part);
            if (kv.rfind("fp_session=", 0) == 0) {
                auto it = sessions_.find(kv.substr(11));
                if (it != sessions_.end()) {
                    return it->second;
                }
            }
        }
        return std::nullopt;
    }

    void handle_register(const ServerRequest& req, ServerResponse& res) {
        auto field = [&](const char* name) { return trim(req.param(name).value_or("")); };
        const auto marker = field("fp_registration");
        const auto nonce = field("_wpnonce");
        if (marker.empty() || nonce.empty()) {
            // the handler returns early and the page renders as if nothing was posted
            html(res, registration_form(""));
            return;
        }
        if (nonce != nonce_) {
            html(res, registration_form("Your registration could not be processed."));
            return;
        }
        const auto login = field("user_login");
        const auto email = field("user_email");
        const auto pass = field("user_pass");
        if (login.empty() || email.empty() || pass.empty()) {
            html(res, registration_form("Username, email and password are required."));
            return;
        }
        std::string role = "subscriber";
        const auto requested = field("role");
        if (!requested.empty() && known_roles().count(requested)) {
            role = requested;
        }
        std::string token;
        {
            std::lock_guard lock(state_mu_);
            for (const auto& u : users_) {
                if (u.login == login) {
                    html(res, registration_form("That username is already registered."));
                    return;
                }
            }
            users_.push_back({login, email, role, false});
            token = seeded_token(seed_, "session:" + login, 16);
            sessions_[token] = login;
        }
        res.status = 302;
        res.set_header("Location", "/profile");
        res.set_header("Set-Cookie", "fp_session=" + token + "; Path=/; HttpOnly");
    }

    std::string nonce_;
    std::vector<User> users_;
    std::map<std::string, std::string> sessions_;
};

} // namespace

std::unique_ptr<FixtureTarget> make_regrole(const FixtureOptions& options) {
    return std::make_unique<RegroleFixture>(options);
}

} // namespace vulnval::detail
