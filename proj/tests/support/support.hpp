#pragma once

// Helpers shared by the unit tests and the acceptance binary.

#include "vulnval/engine.hpp"
#include "vulnval/evaluator.hpp"
#include "vulnval/fixtures.hpp"

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace vvtest {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

fs::path data_file(const std::string& name);
fs::path cassette(const std::string& name);
fs::path script(const std::string& name);

vulnval::RunRecord record(const std::string& target, int run, std::optional<int> tca, int max_attempts = 5);

/// Raw TCP listener that only counts accepted connections. Nothing in the suite is
/// allowed to reach it.
class ConnectionCounter {
public:
    ConnectionCounter();
    ~ConnectionCounter();

    int port() const { return port_; }
    int connections() const { return accepted_.load(); }

private:
    int fd_ = -1;
    int port_ = 0;
    std::atomic<int> accepted_{0};
    std::atomic<bool> stop_{false};
    std::thread thread_;
};

/// Process-wide forbidden port, started on first use.
ConnectionCounter& forbidden_listener();

struct InstrumentedRun {
    vulnval::RunResult result;
    std::size_t env_interactions = 0;
    std::size_t source_reads = 0;
    std::map<vulnval::AgentRole, int> turns;
    /// Every message content sent to or received from the backend.
    std::vector<std::string> transcript;
};

struct RunSettings {
    vulnval::EngineMode mode = vulnval::EngineMode::greybox_multi;
    int max_attempts = 5;
    /// Starts a callback listener for outbound oracles.
    bool listener = false;
};

/// Runs the engine against `fixture` with `backend`, counting environment interactions,
/// source-tree reads and backend turns.
InstrumentedRun run_instrumented(vulnval::FixtureTarget& fixture, vulnval::LlmBackend& backend,
                                 const RunSettings& settings = {});

/// Replay of a shipped cassette against a fixture.
InstrumentedRun run_cassette(vulnval::FixtureTarget& fixture, const std::string& cassette_name,
                             const RunSettings& settings = {});

std::unique_ptr<vulnval::FixtureTarget> start(vulnval::FixtureName name, const std::string& variant = "file_access");

/// Sum of trace interaction counts over the run's loops.
std::size_t trace_interactions(const vulnval::RunResult& result);

/// Oracle parameter values that leaked into failure feedback, evaluator feedback entries
/// or loop summaries. Empty when clean.
std::vector<std::string> leaked_secrets(const vulnval::TargetManifest& manifest, const vulnval::RunResult& result);

} // namespace vvtest
