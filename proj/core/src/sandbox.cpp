#include "vulnval/sandbox.hpp"

#include "vulnval/errors.hpp"
#include "vulnval/util.hpp"

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cerrno>
#include <cstring>
#include <regex>

namespace vulnval {

namespace fs = std::filesystem;

Authority Authority::parse(std::string_view text) {
    auto colon = text.rfind(':');
    if (colon == std::string_view::npos || colon == 0 || colon + 1 == text.size()) {
        throw std::invalid_argument("expected HOST:PORT, got '" + std::string(text) + "'");
    }
    Authority a;
    a.host = std::string(text.substr(0, colon));
    try {
        std::size_t used = 0;
        a.port = std::stoi(std::string(text.substr(colon + 1)), &used);
        if (used != text.size() - colon - 1 || a.port < 1 || a.port > 65535) {
            throw std::invalid_argument("port");
        }
    } catch (const std::exception&) {
        throw std::invalid_argument("invalid port in '" + std::string(text) + "'");
    }
    return a;
}

std::set<std::string> default_tool_allowlist() {
    return {"echo", "printf", "cat",  "grep",   "egrep", "sed",       "awk",    "head",   "tail", "wc",
            "sort", "uniq",   "cut",  "tr",     "ls",    "test",      "[",      "true",   "false", "base64",
            "sha256sum", "md5sum", "xxd", "od", "tee", "mkdir", "touch", "pwd", "cd", "export", "sleep", "date",
            "curl", "jq", "find", "stat", "diff", "basename", "dirname", "seq", "rev", "expr", "read"};
}

namespace {

// ---------------------------------------------------------------------------
// Command policy
// ---------------------------------------------------------------------------

using Segment = std::vector<std::string>;

std::vector<Segment> shell_segments(std::string_view cmd) {
    std::vector<Segment> segments(1);
    std::string word;
    bool in_word = false;
    bool skip_next = false; // next word is a redirection target
    char quote = 0;

    auto end_word = [&] {
        if (in_word) {
            if (skip_next) {
                skip_next = false;
            } else {
                segments.back().push_back(word);
            }
        }
        word.clear();
        in_word = false;
    };
    auto end_segment = [&] {
        end_word();
        if (!segments.back().empty()) {
            segments.emplace_back();
        }
    };

    for (std::size_t i = 0; i < cmd.size(); ++i) {
        char c = cmd[i];
        if (quote) {
            if (c == quote) {
                quote = 0;
            } else if (c == '\\' && quote == '"' && i + 1 < cmd.size()) {
                word += cmd[++i];
            } else {
                word += c;
            }
            continue;
        }
        switch (c) {
        case '\'':
        case '"':
            quote = c;
            in_word = true;
            break;
        case '\\':
            if (i + 1 < cmd.size()) {
                if (cmd[i + 1] != '\n') {
                    word += cmd[i + 1];
                    in_word = true;
                }
                ++i;
            }
            break;
        case ' ':
        case '\t':
            end_word();
            break;
        case ';':
        case '|':
        case '&':
        case '\n':
        case '(':
        case ')':
            end_segment();
            break;
        case '>':
        case '<': {
            // a bare fd number before the operator belongs to the redirection
            if (in_word && !word.empty() && std::all_of(word.begin(), word.end(), ::isdigit)) {
                word.clear();
                in_word = false;
            }
            end_word();
            while (i + 1 < cmd.size() && (cmd[i + 1] == '>' || cmd[i + 1] == '<' || cmd[i + 1] == '&')) {
                ++i;
            }
            // `>&2` style duplication has an fd, not a file, as its target
            if (i + 1 < cmd.size() && std::isdigit(static_cast<unsigned char>(cmd[i + 1]))) {
                while (i + 1 < cmd.size() && std::isdigit(static_cast<unsigned char>(cmd[i + 1]))) {
                    ++i;
                }
            } else {
                skip_next = true;
            }
            break;
        }
        default:
            word += c;
            in_word = true;
        }
    }
    if (quote) {
        throw PolicyError("unterminated quote in command");
    }
    end_word();
    if (segments.back().empty()) {
        segments.pop_back();
    }
    return segments;
}

bool is_assignment(const std::string& w) {
    auto eq = w.find('=');
    if (eq == std::string::npos || eq == 0) {
        return false;
    }
    return std::all_of(w.begin(), w.begin() + static_cast<long>(eq),
                       [](unsigned char c) { return std::isalnum(c) || c == '_'; });
}

const std::set<std::string>& shell_keywords() {
    static const std::set<std::string> k{"if", "then", "else", "elif", "fi", "do", "done", "while", "until", "!", "{", "}"};
    return k;
}

void check_network_token(const std::string& token, const std::set<Authority>& allowlist) {
    static const std::regex url_re(R"(([A-Za-z][A-Za-z0-9+.\-]*)://([^/\s'"?#]*))");
    for (std::sregex_iterator it(token.begin(), token.end(), url_re), end; it != end; ++it) {
        auto scheme = to_lower((*it)[1].str());
        auto authority = (*it)[2].str();
        if (auto at = authority.rfind('@'); at != std::string::npos) {
            authority = authority.substr(at + 1);
        }
        if (scheme != "http" && scheme != "https") {
            throw PolicyError("URL scheme not permitted: " + scheme);
        }
        if (authority.empty()) {
            throw PolicyError("URL without a host: " + token);
        }
        Authority a;
        auto colon = authority.rfind(':');
        if (colon == std::string::npos) {
            a = {authority, scheme == "https" ? 443 : 80};
        } else {
            try {
                a = Authority::parse(authority);
            } catch (const std::invalid_argument&) {
                throw PolicyError("unparseable network destination: " + authority);
            }
        }
        if (!allowlist.count(a)) {
            throw PolicyError("network destination not allowlisted: " + a.str());
        }
    }
}

void check_curl_arguments(const Segment& seg, std::size_t program_at) {
    static const std::set<std::string> with_arg{"-X", "--request", "-H", "--header", "-d", "--data", "--data-raw",
                                                "--data-binary", "--data-urlencode", "-o", "--output", "-b",
                                                "--cookie", "-c", "--cookie-jar", "-u", "--user", "-A",
                                                "--user-agent", "-e", "--referer", "-F", "--form", "-w",
                                                "--write-out", "-m", "--max-time", "--connect-timeout", "--url",
                                                "-D", "--dump-header", "-T", "--upload-file", "--retry"};
    static const std::set<std::string> forbidden{"-x", "--proxy", "--resolve", "--connect-to", "-K", "--config",
                                                 "--unix-socket", "--abstract-unix-socket", "--preproxy",
                                                 "--socks5", "--socks4", "--socks5-hostname", "--interface"};
    for (std::size_t i = program_at + 1; i < seg.size(); ++i) {
        const auto& t = seg[i];
        auto name = t.substr(0, t.find('='));
        if (forbidden.count(name)) {
            throw PolicyError("curl option not permitted: " + name);
        }
        if (with_arg.count(t)) {
            ++i;
            continue;
        }
        if (!t.empty() && t.front() == '-') {
            continue;
        }
        if (t.find("://") == std::string::npos) {
            throw PolicyError("curl destinations must be absolute http(s) URLs: '" + t + "'");
        }
    }
}

} // namespace

void check_command_policy(std::string_view command, const std::set<std::string>& tool_allowlist,
                          const std::set<Authority>& network_allowlist) {
    for (std::string_view bad : {"$(", "`", "<(", ">(", "/dev/tcp", "/dev/udp"}) {
        if (command.find(bad) != std::string_view::npos) {
            throw PolicyError("shell construct not permitted: " + std::string(bad));
        }
    }
    for (const auto& seg : shell_segments(command)) {
        std::size_t i = 0;
        while (i < seg.size() && (is_assignment(seg[i]) || shell_keywords().count(seg[i]))) {
            ++i;
        }
        if (i == seg.size()) {
            continue;
        }
        auto program = fs::path(seg[i]).filename().string();
        if (program == "for" || program == "case") {
            throw PolicyError("shell construct not permitted: " + program);
        }
        if (!tool_allowlist.count(program)) {
            throw PolicyError("program not allowlisted: " + program);
        }
        for (const auto& token : seg) {
            check_network_token(token, network_allowlist);
        }
        if (program == "curl") {
            check_curl_arguments(seg, i);
        }
    }
}

// ---------------------------------------------------------------------------
// Process execution
// ---------------------------------------------------------------------------

CommandResult run_shell(const std::string& command, const fs::path& cwd, std::chrono::milliseconds timeout) {
    constexpr std::size_t cap = 1 << 20;
    int out_pipe[2];
    int err_pipe[2];
    if (pipe(out_pipe) != 0 || pipe(err_pipe) != 0) {
        throw EnvironmentError(std::string("pipe: ") + std::strerror(errno));
    }
    const std::string home = "HOME=" + cwd.string();
    std::array<const char*, 4> envp{"PATH=/usr/local/bin:/usr/bin:/bin", home.c_str(), "LANG=C.UTF-8", nullptr};

    pid_t pid = fork();
    if (pid < 0) {
        throw EnvironmentError(std::string("fork: ") + std::strerror(errno));
    }
    if (pid == 0) {
        setpgid(0, 0);
        dup2(out_pipe[1], STDOUT_FILENO);
        dup2(err_pipe[1], STDERR_FILENO);
        close(out_pipe[0]);
        close(err_pipe[0]);
        close(out_pipe[1]);
        close(err_pipe[1]);
        if (chdir(cwd.c_str()) != 0) {
            _exit(126);
        }
        execle("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr), const_cast<char**>(envp.data()));
        _exit(127);
    }
    setpgid(pid, pid);
    close(out_pipe[1]);
    close(err_pipe[1]);

    CommandResult result;
    std::array<pollfd, 2> fds{pollfd{out_pipe[0], POLLIN, 0}, pollfd{err_pipe[0], POLLIN, 0}};
    std::array<std::string*, 2> sinks{&result.stdout_text, &result.stderr_text};
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    int open_fds = 2;
    char buf[8192];
    while (open_fds > 0) {
        auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) {
            result.timed_out = true;
            kill(-pid, SIGKILL);
            break;
        }
        int rc = poll(fds.data(), fds.size(), static_cast<int>(std::min<long>(left.count(), 1000)));
        if (rc < 0 && errno != EINTR) {
            break;
        }
        for (std::size_t i = 0; i < fds.size(); ++i) {
            if (fds[i].fd < 0 || !(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) {
                continue;
            }
            auto n = read(fds[i].fd, buf, sizeof buf);
            if (n <= 0) {
                close(fds[i].fd);
                fds[i].fd = -1;
                --open_fds;
            } else if (sinks[i]->size() < cap) {
                sinks[i]->append(buf, std::min<std::size_t>(static_cast<std::size_t>(n), cap - sinks[i]->size()));
            }
        }
    }
    for (auto& f : fds) {
        if (f.fd >= 0) {
            close(f.fd);
        }
    }
    int status = 0;
    while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    if (result.timed_out) {
        result.exit_code = kTimeoutExitCode;
    } else if (WIFEXITED(status)) {
        result.exit_code = WEXITSTATUS(status);
    } else if (WIFSIGNALED(status)) {
        result.exit_code = 128 + WTERMSIG(status);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Environment base
// ---------------------------------------------------------------------------

ExecutionEnvironment::ExecutionEnvironment(std::string env_id, fs::path workdir, std::set<Authority> allowlist,
                                           EnvironmentSettings settings)
    : env_id_(std::move(env_id)), workdir_(std::move(workdir)), allowlist_(std::move(allowlist)),
      settings_(std::move(settings)) {
    if (allowlist_.empty()) {
        throw EnvironmentError("network allowlist must not be empty");
    }
}

void ExecutionEnvironment::require_alive() const {
    if (!alive_) {
        throw EnvironmentError("environment " + env_id_ + " has been destroyed");
    }
}

void ExecutionEnvironment::notify(std::string_view kind, std::string_view detail) {
    ++interactions_;
    if (observer_) {
        observer_(kind, detail);
    }
}

CommandResult ExecutionEnvironment::exec_command(const std::string& command) {
    require_alive();
    notify("command", command);
    check_command_policy(command, settings_.tool_allowlist, allowlist_);
    return do_exec(command);
}

HttpResponse ExecutionEnvironment::http_request(const std::string& method, const std::string& url,
                                                const HeaderList& headers, const std::string& body) {
    require_alive();
    notify("http_request", method + " " + url);
    Url parsed;
    try {
        parsed = Url::parse(url);
    } catch (const std::invalid_argument& e) {
        throw PolicyError(std::string("invalid request URL: ") + e.what());
    }
    if (!allowlist_.count(Authority::of(parsed))) {
        throw PolicyError("network destination not allowlisted: " + parsed.authority());
    }
    HttpRequestSpec spec;
    spec.method = method;
    spec.url = url;
    spec.headers = headers;
    spec.body = body;
    spec.timeout = settings_.http_timeout;
    return http_send(spec);
}

void ExecutionEnvironment::write_file(const std::string& relative_path, const std::string& content) {
    require_alive();
    notify("write_file", relative_path);
    fs::path rel(relative_path);
    auto normal = rel.lexically_normal().generic_string();
    if (rel.is_absolute() || normal.rfind("..", 0) == 0) {
        throw PolicyError("write_file path must stay inside the workdir: " + relative_path);
    }
    if (protected_paths_.count(normal)) {
        throw PolicyError("source copy is read-only: " + relative_path);
    }
    auto target = workdir_ / normal;
    fs::create_directories(target.parent_path());
    write_file_atomic(target, content);
}

void ExecutionEnvironment::destroy() {
    if (!alive_) {
        return;
    }
    alive_ = false;
    do_destroy();
}

// ---------------------------------------------------------------------------
// Local environment
// ---------------------------------------------------------------------------

namespace {

std::set<Authority> allowlist_for(const TargetManifest& manifest, const std::optional<Authority>& listener) {
    std::set<Authority> out;
    try {
        out.insert(Authority::of(Url::parse(manifest.base_url)));
    } catch (const std::invalid_argument& e) {
        throw EnvironmentError(std::string("invalid base_url: ") + e.what());
    }
    if (listener) {
        out.insert(*listener);
    }
    return out;
}

fs::path make_workdir(const EnvironmentSettings& settings, const std::string& env_id) {
    auto root = settings.scratch_root.value_or(fs::temp_directory_path() / "vulnval-envs");
    auto dir = root / env_id;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw EnvironmentError("cannot create workdir " + dir.string() + ": " + ec.message());
    }
    return dir;
}

std::set<std::string> copy_source_read_only(const TargetManifest& manifest, const fs::path& workdir) {
    std::set<std::string> copied;
    if (manifest.mode != ManifestMode::greybox || !manifest.source_root) {
        return copied;
    }
    std::error_code ec;
    fs::copy(*manifest.source_root, workdir, fs::copy_options::recursive, ec);
    if (ec) {
        throw EnvironmentError("cannot copy source tree: " + ec.message());
    }
    for (const auto& entry : fs::recursive_directory_iterator(workdir)) {
        if (entry.is_regular_file()) {
            copied.insert(entry.path().lexically_relative(workdir).generic_string());
            fs::permissions(entry.path(), fs::perms::owner_write | fs::perms::group_write | fs::perms::others_write,
                            fs::perm_options::remove, ec);
        }
    }
    return copied;
}

std::string new_env_id() { return "env-" + random_hex(6); }

} // namespace

LocalEnvironment::LocalEnvironment(const TargetManifest& manifest, std::optional<Authority> listener,
                                   EnvironmentSettings settings)
    : ExecutionEnvironment(new_env_id(), fs::path(), allowlist_for(manifest, listener), std::move(settings)) {
    set_workdir(make_workdir(this->settings(), env_id()));
    protected_paths_ = copy_source_read_only(manifest, workdir());
}

LocalEnvironment::~LocalEnvironment() { destroy(); }

CommandResult LocalEnvironment::do_exec(const std::string& command) {
    return run_shell(command, workdir(), settings().command_timeout);
}

void LocalEnvironment::do_destroy() {
    std::error_code ec;
    for (const auto& entry : fs::recursive_directory_iterator(workdir(), ec)) {
        fs::permissions(entry.path(), fs::perms::owner_all, fs::perm_options::add, ec);
    }
    fs::remove_all(workdir(), ec);
}

// ---------------------------------------------------------------------------
// Factory
// ---------------------------------------------------------------------------

std::unique_ptr<ExecutionEnvironment> create_env(const TargetManifest& manifest, std::optional<Authority> listener,
                                                 const EnvironmentSettings& settings) {
    if (manifest.sandbox && manifest.sandbox->runtime == "container") {
        return std::make_unique<ContainerEnvironment>(manifest, listener, settings, manifest.sandbox->socket,
                                                      manifest.sandbox->image);
    }
    return std::make_unique<LocalEnvironment>(manifest, listener, settings);
}

} // namespace vulnval
