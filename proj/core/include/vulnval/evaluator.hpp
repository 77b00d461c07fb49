#pragma once

#include "vulnval/domain.hpp"
#include "vulnval/http.hpp"
#include "vulnval/sandbox.hpp"

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace vulnval {

/// Plain HTTP server recording every inbound request; optionally mirrored to an NDJSON log.
class CallbackListener {
public:
    struct Received {
        std::string timestamp;
        std::string method;
        std::string path;
        HeaderList headers;
        std::string body;
    };

    explicit CallbackListener(std::optional<std::filesystem::path> log_path = std::nullopt);
    ~CallbackListener();

    /// Returns the bound port. Port 0 picks a free port.
    int start(const std::string& host = "127.0.0.1", int port = 0);
    void stop();

    Authority authority() const { return {host_, port_}; }
    std::string url() const { return "http://" + authority().str(); }

    std::vector<Received> received() const;
    void clear();

private:
    HttpServer server_;
    std::optional<std::filesystem::path> log_path_;
    std::string host_ = "127.0.0.1";
    int port_ = 0;
    mutable std::mutex mu_;
    std::vector<Received> received_;
};

struct EvidenceSources {
    /// Probe strings of the form "GET /path" are resolved against this URL.
    std::string base_url;
    const ExecutionTrace* trace = nullptr;
    const CallbackListener* listener = nullptr;
    /// Working directory for "cmd:" probes.
    std::optional<std::filesystem::path> probe_cwd;
    std::chrono::milliseconds probe_timeout{10000};
};

/// Oracle runner bound to the evidence channels of one run.
class Evaluator {
public:
    explicit Evaluator(CallbackListener* listener = nullptr, std::optional<std::filesystem::path> probe_cwd = std::nullopt)
        : listener_(listener), probe_cwd_(std::move(probe_cwd)) {}

    /// Forgets callbacks from earlier runs.
    void begin_run() const;
    EvidenceSources sources(const std::string& base_url, const ExecutionTrace* trace) const;
    Verdict evaluate(const TargetManifest& manifest, const ExecutionTrace& trace) const;
    CallbackListener* listener() const { return listener_; }

private:
    CallbackListener* listener_;
    std::optional<std::filesystem::path> probe_cwd_;
};

/// Kind-specific post-condition check. Status is withheld when the probe channel is unavailable.
Verdict evaluate_oracle(const OracleSpec& spec, const EvidenceSources& sources);

/// Deterministic one-paragraph feedback. Failure evidence never carries oracle parameters.
std::string feedback_text(const Verdict& verdict);
/// As above, additionally replacing any occurrence of a parameter value.
std::string feedback_text(const Verdict& verdict, const OracleSpec& spec);

/// Runs a probe string ("GET /path", "POST /path", an absolute URL or "cmd:<shell>") and
/// returns its output. Throws NetworkError or EnvironmentError when the channel is unavailable.
std::string run_probe(const std::string& probe, const EvidenceSources& sources);

} // namespace vulnval
