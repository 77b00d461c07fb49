#pragma once

#include "vulnval/domain.hpp"
#include "vulnval/http.hpp"
#include "vulnval/util.hpp"

#include <chrono>
#include <compare>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>

namespace vulnval {

struct Authority {
    std::string host;
    int port = 0;

    auto operator<=>(const Authority&) const = default;
    std::string str() const { return host + ":" + std::to_string(port); }
    /// Parses "host:port". Throws std::invalid_argument.
    static Authority parse(std::string_view text);
    static Authority of(const Url& url) { return {url.host, url.port}; }
};

std::set<std::string> default_tool_allowlist();

struct EnvironmentSettings {
    std::chrono::milliseconds command_timeout{60000};
    std::set<std::string> tool_allowlist = default_tool_allowlist();
    /// Parent of per-environment workdirs; defaults to <tmp>/vulnval-envs.
    std::optional<std::filesystem::path> scratch_root;
    std::chrono::milliseconds http_timeout{15000};
};

struct CommandResult {
    int exit_code = 0;
    std::string stdout_text;
    std::string stderr_text;
    bool timed_out = false;
};

/// Exit code reported for a command killed by the timeout.
inline constexpr int kTimeoutExitCode = 124;

/// Checks a shell command against the program allowlist and the network allowlist.
/// Throws PolicyError naming the offending program or authority.
void check_command_policy(std::string_view command, const std::set<std::string>& tool_allowlist,
                          const std::set<Authority>& network_allowlist);

/// Called once per interaction before it is attempted: kind is "command", "http_request" or "write_file".
using InteractionObserver = std::function<void(std::string_view kind, std::string_view detail)>;

/// Attacker workspace. Operations are serialized by the caller (one run per environment).
class ExecutionEnvironment {
public:
    virtual ~ExecutionEnvironment() = default;

    const std::string& env_id() const { return env_id_; }
    const std::filesystem::path& workdir() const { return workdir_; }
    const std::set<Authority>& network_allowlist() const { return allowlist_; }
    const EnvironmentSettings& settings() const { return settings_; }
    bool alive() const { return alive_; }

    /// Throws PolicyError (program not allowlisted) or EnvironmentError (destroyed).
    /// Timeouts are reported as exit code 124 with partial output.
    CommandResult exec_command(const std::string& command);

    /// Throws PolicyError before connecting when the authority is not allowlisted,
    /// NetworkError on connection failure or timeout.
    HttpResponse http_request(const std::string& method, const std::string& url, const HeaderList& headers,
                              const std::string& body);

    /// Writes a scratch file relative to workdir; the source copy cannot be overwritten.
    void write_file(const std::string& relative_path, const std::string& content);

    void destroy();

    void set_observer(InteractionObserver observer) { observer_ = std::move(observer); }
    std::size_t interaction_count() const { return interactions_; }

protected:
    ExecutionEnvironment(std::string env_id, std::filesystem::path workdir, std::set<Authority> allowlist,
                         EnvironmentSettings settings);

    virtual CommandResult do_exec(const std::string& command) = 0;
    virtual void do_destroy() {}
    void set_workdir(std::filesystem::path workdir) { workdir_ = std::move(workdir); }

    std::set<std::string> protected_paths_;

private:
    void require_alive() const;
    void notify(std::string_view kind, std::string_view detail);

    std::string env_id_;
    std::filesystem::path workdir_;
    std::set<Authority> allowlist_;
    EnvironmentSettings settings_;
    bool alive_ = true;
    std::size_t interactions_ = 0;
    InteractionObserver observer_;
};

/// Local-process environment: commands run through /bin/sh inside the workdir.
class LocalEnvironment : public ExecutionEnvironment {
public:
    LocalEnvironment(const TargetManifest& manifest, std::optional<Authority> listener, EnvironmentSettings settings);
    ~LocalEnvironment() override;

protected:
    CommandResult do_exec(const std::string& command) override;
    void do_destroy() override;
};

/// Container-backed environment speaking the Docker Engine HTTP API over a unix socket.
/// The workdir is bind-mounted at /work; HTTP requests still go through the in-engine policy.
class ContainerEnvironment : public ExecutionEnvironment {
public:
    ContainerEnvironment(const TargetManifest& manifest, std::optional<Authority> listener, EnvironmentSettings settings,
                         std::string socket_path, std::string image);
    ~ContainerEnvironment() override;

    const std::string& container_id() const { return container_id_; }

protected:
    CommandResult do_exec(const std::string& command) override;
    void do_destroy() override;

private:
    HttpResponse api(const std::string& method, const std::string& path, const std::string& body = "") const;

    std::string socket_path_;
    std::string container_id_;
};

/// Runs `command` under /bin/sh -c in `cwd` with a timeout. Shared by the sandbox and probes.
CommandResult run_shell(const std::string& command, const std::filesystem::path& cwd, std::chrono::milliseconds timeout);

/// Builds the environment described by the manifest (`sandbox.runtime`), local by default.
std::unique_ptr<ExecutionEnvironment> create_env(const TargetManifest& manifest, std::optional<Authority> listener,
                                                 const EnvironmentSettings& settings = {});

using EnvFactory = std::function<std::unique_ptr<ExecutionEnvironment>(const TargetManifest&)>;

} // namespace vulnval
