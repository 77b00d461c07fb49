#include "fixture_common.hpp"

#include "vulnval/assets.hpp"
#include "vulnval/errors.hpp"
#include "vulnval/util.hpp"

namespace vulnval {

namespace fs = std::filesystem;

std::string_view to_string(FixtureName v) {
    switch (v) {
    case FixtureName::regrole: return "regrole";
    case FixtureName::toolexec: return "toolexec";
    case FixtureName::fileserve: return "fileserve";
    }
    return "?";
}

FixtureName parse_fixture_name(std::string_view s) {
    if (s == "regrole") return FixtureName::regrole;
    if (s == "toolexec") return FixtureName::toolexec;
    if (s == "fileserve") return FixtureName::fileserve;
    throw std::invalid_argument("unknown fixture '" + std::string(s) + "' (expected regrole, toolexec or fileserve)");
}

std::string seeded_token(std::uint64_t seed, std::string_view label, std::size_t length) {
    return sha256_hex(std::to_string(seed) + ":" + std::string(label)).substr(0, length);
}

std::unique_ptr<FixtureTarget> start_fixture(const FixtureOptions& options) {
    switch (options.name) {
    case FixtureName::regrole: return detail::make_regrole(options);
    case FixtureName::toolexec: return detail::make_toolexec(options);
    case FixtureName::fileserve: return detail::make_fileserve(options);
    }
    throw FixtureError("unknown fixture");
}

namespace detail {

std::string html_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

void reply_json(ServerResponse& res, int status, const std::string& body) {
    res.status = status;
    res.content_type = "application/json";
    res.body = body;
}

void write_source_tree(FixtureName name, const fs::path& dest) {
    const std::string prefix = "fixtures/" + std::string(to_string(name)) + "/";
    auto names = assets::list(prefix);
    if (names.empty()) {
        throw FixtureError("no embedded source tree for fixture " + std::string(to_string(name)));
    }
    for (auto asset : names) {
        auto target = dest / std::string(asset.substr(prefix.size()));
        fs::create_directories(target.parent_path());
        write_file_atomic(target, *assets::find(asset));
    }
}

void ServerFixture::launch(const FixtureOptions& options, const std::function<TargetManifest()>& build_manifest) {
    seed_ = options.seed;
    host_ = options.host;
    try {
        port_ = server_.start(options.host, options.port);
    } catch (const NetworkError& e) {
        throw FixtureError(std::string("cannot start fixture ") + std::string(to_string(name())) + ": " + e.what());
    }
    workspace_ = options.workspace.value_or(fs::temp_directory_path() / "vulnval-fixtures" /
                                            (std::string(to_string(name())) + "-" + std::to_string(port_)));
    fs::create_directories(workspace_);
    workspace_ = fs::absolute(workspace_);
    auto source = workspace_ / "source";
    std::error_code ec;
    fs::remove_all(source, ec);
    write_source_tree(name(), source);
    manifest_ = build_manifest();
    manifest_path_ = workspace_ / "manifest.json";
    write_file_atomic(manifest_path_, serialize_target_manifest(manifest_));
}

void ServerFixture::reset() {
    if (!alive()) {
        throw FixtureError(std::string(to_string(name())) + " fixture is not running");
    }
    std::lock_guard lock(state_mu_);
    reset_state();
}

void ServerFixture::stop() { server_.stop(); }

void ServerFixture::add_reset_route() {
    server_.route("POST", "/__reset", [this](const ServerRequest& req, ServerResponse& res) {
        if (!req.from_loopback()) {
            res.status = 403;
            res.body = "forbidden\n";
            return;
        }
        std::lock_guard lock(state_mu_);
        reset_state();
        res.body = "reset\n";
    });
}

} // namespace detail

} // namespace vulnval
