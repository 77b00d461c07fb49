#pragma once

#include <chrono>
#include <compare>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <vector>

namespace vulnval {

struct Endpoint {
    std::string path;
    int status_code = 0;
    std::size_t content_length = 0;

    auto operator<=>(const Endpoint&) const = default;
};

struct EndpointSet {
    std::string base_url;
    /// Sorted by path; paths are unique.
    std::vector<Endpoint> discovered;
    std::string scanned_at;
    std::string wordlist_digest;

    /// Equality ignores scanned_at.
    bool operator==(const EndpointSet& o) const {
        return base_url == o.base_url && discovered == o.discovered && wordlist_digest == o.wordlist_digest;
    }
};

struct ReconOptions {
    std::set<int> include_statuses{200, 204, 301, 302, 401, 403};
    int concurrency_limit = 4;
    std::chrono::milliseconds timeout{5000};
    std::chrono::seconds cache_ttl{3600};
    /// Called with each URL before it is probed (liveness probe included).
    std::function<void(const std::string&)> on_probe;
};

/// Built-in wordlist asset (one path per line, '#' comments).
/// Parsing drops leading slashes and repeated entries.
std::vector<std::string> default_wordlist();
std::vector<std::string> parse_wordlist(std::string_view text);
std::vector<std::string> load_wordlist(const std::filesystem::path& path);
std::string wordlist_digest(const std::vector<std::string>& wordlist);

/// One liveness probe of base_url, then one GET per candidate.
/// Throws TargetUnreachableError when the host does not answer, std::invalid_argument on a malformed URL.
EndpointSet discover_endpoints(const std::string& base_url, const std::vector<std::string>& wordlist,
                               const ReconOptions& options = {});

/// Returns the cached set for (base_url, wordlist digest) when younger than the TTL,
/// otherwise rescans and atomically rewrites the cache. Corrupt caches are rescanned
/// and a warning is appended to `warnings`.
EndpointSet cached_endpoints(const std::string& base_url, const std::vector<std::string>& wordlist,
                             const std::filesystem::path& cache_dir, const ReconOptions& options = {},
                             std::vector<std::string>* warnings = nullptr);

std::filesystem::path endpoint_cache_file(const std::filesystem::path& cache_dir, const std::string& base_url);

/// One line per endpoint: "<path> <status> <length>".
std::string format_endpoint_inventory(const EndpointSet& endpoints);

} // namespace vulnval
