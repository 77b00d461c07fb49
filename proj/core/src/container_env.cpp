#include "vulnval/sandbox.hpp"

#include "vulnval/errors.hpp"
#include "vulnval/util.hpp"

#include "json_io.hpp"

namespace vulnval {

namespace fs = std::filesystem;

namespace {

// Docker multiplexes exec output as frames: [stream, 0, 0, 0, size (big endian u32)] + payload.
void demux(const std::string& raw, CommandResult& out) {
    std::size_t i = 0;
    while (i + 8 <= raw.size()) {
        auto stream = static_cast<unsigned char>(raw[i]);
        std::size_t len = (static_cast<std::size_t>(static_cast<unsigned char>(raw[i + 4])) << 24) |
                          (static_cast<std::size_t>(static_cast<unsigned char>(raw[i + 5])) << 16) |
                          (static_cast<std::size_t>(static_cast<unsigned char>(raw[i + 6])) << 8) |
                          static_cast<std::size_t>(static_cast<unsigned char>(raw[i + 7]));
        i += 8;
        auto chunk = raw.substr(i, len);
        i += len;
        (stream == 2 ? out.stderr_text : out.stdout_text) += chunk;
    }
}

std::set<Authority> container_allowlist(const TargetManifest& manifest, const std::optional<Authority>& listener) {
    std::set<Authority> out{Authority::of(Url::parse(manifest.base_url))};
    if (listener) {
        out.insert(*listener);
    }
    return out;
}

} // namespace

ContainerEnvironment::ContainerEnvironment(const TargetManifest& manifest, std::optional<Authority> listener,
                                           EnvironmentSettings settings, std::string socket_path, std::string image)
    : ExecutionEnvironment("env-" + random_hex(6), fs::path(), container_allowlist(manifest, listener),
                           std::move(settings)),
      socket_path_(std::move(socket_path)) {
    auto root = this->settings().scratch_root.value_or(fs::temp_directory_path() / "vulnval-envs");
    set_workdir(root / env_id());
    fs::create_directories(workdir());
    if (manifest.mode == ManifestMode::greybox && manifest.source_root) {
        std::error_code ec;
        fs::copy(*manifest.source_root, workdir(), fs::copy_options::recursive, ec);
        if (ec) {
            throw EnvironmentError("cannot copy source tree: " + ec.message());
        }
        for (const auto& entry : fs::recursive_directory_iterator(workdir())) {
            if (entry.is_regular_file()) {
                protected_paths_.insert(entry.path().lexically_relative(workdir()).generic_string());
            }
        }
    }

    json create{{"Image", image},
                {"Cmd", {"sleep", "infinity"}},
                {"WorkingDir", "/work"},
                {"Labels", {{"vulnval.env", env_id()}}},
                {"HostConfig", {{"Binds", {workdir().string() + ":/work"}}, {"NetworkMode", "bridge"}}}};
    auto res = api("POST", "/containers/create?name=vulnval-" + env_id(), create.dump());
    if (res.status != 201) {
        throw EnvironmentError("container create failed (HTTP " + std::to_string(res.status) + "): " + res.body);
    }
    container_id_ = json::parse(res.body).at("Id").get<std::string>();
    res = api("POST", "/containers/" + container_id_ + "/start");
    if (res.status != 204 && res.status != 304) {
        throw EnvironmentError("container start failed (HTTP " + std::to_string(res.status) + "): " + res.body);
    }
}

ContainerEnvironment::~ContainerEnvironment() {
    try {
        destroy();
    } catch (const std::exception&) {
    }
}

HttpResponse ContainerEnvironment::api(const std::string& method, const std::string& path, const std::string& body) const {
    HttpRequestSpec spec;
    spec.method = method;
    spec.url = path;
    spec.body = body;
    if (!body.empty()) {
        spec.headers.emplace_back("Content-Type", "application/json");
    }
    spec.timeout = settings().command_timeout + std::chrono::seconds(10);
    try {
        return http_send_unix(socket_path_, spec);
    } catch (const NetworkError& e) {
        throw EnvironmentError(std::string("container runtime unavailable: ") + e.what());
    }
}

CommandResult ContainerEnvironment::do_exec(const std::string& command) {
    auto secs = std::max<long>(1, std::chrono::duration_cast<std::chrono::seconds>(settings().command_timeout).count());
    json exec{{"Cmd", {"timeout", std::to_string(secs), "sh", "-c", command}},
              {"AttachStdout", true},
              {"AttachStderr", true},
              {"WorkingDir", "/work"}};
    auto res = api("POST", "/containers/" + container_id_ + "/exec", exec.dump());
    if (res.status != 201) {
        throw EnvironmentError("exec create failed (HTTP " + std::to_string(res.status) + ")");
    }
    auto exec_id = json::parse(res.body).at("Id").get<std::string>();
    res = api("POST", "/exec/" + exec_id + "/start", json{{"Detach", false}, {"Tty", false}}.dump());
    if (res.status != 200) {
        throw EnvironmentError("exec start failed (HTTP " + std::to_string(res.status) + ")");
    }
    CommandResult out;
    demux(res.body, out);
    res = api("GET", "/exec/" + exec_id + "/json");
    if (res.status != 200) {
        throw EnvironmentError("exec inspect failed (HTTP " + std::to_string(res.status) + ")");
    }
    auto info = json::parse(res.body);
    out.exit_code = info.value("ExitCode", -1);
    out.timed_out = out.exit_code == kTimeoutExitCode;
    return out;
}

void ContainerEnvironment::do_destroy() {
    if (!container_id_.empty()) {
        api("POST", "/containers/" + container_id_ + "/stop?t=1");
        api("DELETE", "/containers/" + container_id_ + "?force=true");
    }
    std::error_code ec;
    fs::remove_all(workdir(), ec);
}

} // namespace vulnval
