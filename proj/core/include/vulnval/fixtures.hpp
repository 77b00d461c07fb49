#pragma once

#include "vulnval/domain.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace vulnval {

enum class FixtureName { regrole, toolexec, fileserve };

std::string_view to_string(FixtureName v);
FixtureName parse_fixture_name(std::string_view s);

struct FixtureOptions {
    FixtureName name = FixtureName::regrole;
    std::string host = "127.0.0.1";
    /// 0 picks a free port.
    int port = 0;
    std::uint64_t seed = 1337;
    /// fileserve only: "file_access" (path traversal) or "outbound_service" (webhook fetch).
    std::string variant = "file_access";
    /// Where the source tree and manifest.json are written; defaults to a fresh temp directory.
    std::optional<std::filesystem::path> workspace;
};

/// A running vulnerable target. Behavior is a pure function of the seed and the
/// request sequence since the last reset.
class FixtureTarget {
public:
    virtual ~FixtureTarget() = default;

    virtual FixtureName name() const = 0;
    int port() const { return port_; }
    std::string base_url() const { return "http://" + host_ + ":" + std::to_string(port_); }
    const std::string& seeded_secret() const { return secret_; }
    const TargetManifest& manifest() const { return manifest_; }
    const std::filesystem::path& manifest_path() const { return manifest_path_; }
    const std::filesystem::path& workspace() const { return workspace_; }

    /// Restores the post-start state. Throws FixtureError when the fixture is stopped.
    virtual void reset() = 0;
    virtual void stop() = 0;
    virtual bool alive() const = 0;

protected:
    std::string host_;
    int port_ = 0;
    std::string secret_;
    TargetManifest manifest_;
    std::filesystem::path manifest_path_;
    std::filesystem::path workspace_;
};

/// Starts the fixture, writes its source tree and manifest.json into the workspace.
/// Throws FixtureError when the port is in use.
std::unique_ptr<FixtureTarget> start_fixture(const FixtureOptions& options);

/// Seed-derived token: first `length` hex chars of sha256("<seed>:<label>").
std::string seeded_token(std::uint64_t seed, std::string_view label, std::size_t length = 24);

} // namespace vulnval
