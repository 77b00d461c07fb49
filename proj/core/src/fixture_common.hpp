#pragma once

// Shared scaffolding for the fixture targets. Internal to the library.

#include "vulnval/fixtures.hpp"
#include "vulnval/http.hpp"

#include <mutex>

namespace vulnval::detail {

class ServerFixture : public FixtureTarget {
public:
    void reset() override;
    void stop() override;
    bool alive() const override { return server_.running(); }

protected:
    /// Binds the server, copies the embedded source tree and writes manifest.json.
    /// `build_manifest` runs after the port is known.
    void launch(const FixtureOptions& options, const std::function<TargetManifest()>& build_manifest);

    /// Restores application state; called with state_mu_ held.
    virtual void reset_state() = 0;

    /// Installs the loopback-only POST /__reset route.
    void add_reset_route();

    HttpServer server_;
    mutable std::mutex state_mu_;
    std::uint64_t seed_ = 0;
};

void write_source_tree(FixtureName name, const std::filesystem::path& dest);

std::unique_ptr<FixtureTarget> make_regrole(const FixtureOptions& options);
std::unique_ptr<FixtureTarget> make_toolexec(const FixtureOptions& options);
std::unique_ptr<FixtureTarget> make_fileserve(const FixtureOptions& options);

std::string html_escape(std::string_view s);
void reply_json(ServerResponse& res, int status, const std::string& body);

} // namespace vulnval::detail
