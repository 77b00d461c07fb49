#include "vulnval/recon.hpp"

#include "vulnval/assets.hpp"
#include "vulnval/errors.hpp"
#include "vulnval/http.hpp"
#include "vulnval/util.hpp"

#include "json_io.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <thread>

namespace vulnval {

namespace fs = std::filesystem;

std::vector<std::string> parse_wordlist(std::string_view text) {
    std::vector<std::string> out;
    for (const auto& line : split_lines(text)) {
        auto t = trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        while (!t.empty() && t.front() == '/') {
            t.erase(0, 1);
        }
        if (!t.empty() && std::find(out.begin(), out.end(), t) == out.end()) {
            out.push_back(t);
        }
    }
    return out;
}

std::vector<std::string> default_wordlist() {
    auto text = assets::find("wordlists/common.txt");
    if (!text) {
        throw Error("built-in wordlist asset missing");
    }
    return parse_wordlist(*text);
}

std::vector<std::string> load_wordlist(const fs::path& path) { return parse_wordlist(read_file(path)); }

std::string wordlist_digest(const std::vector<std::string>& wordlist) { return sha256_hex(join(wordlist, "\n")); }

namespace {

std::string base_without_slash(std::string s) {
    while (!s.empty() && s.back() == '/') {
        s.pop_back();
    }
    return s;
}

std::string as_path(const std::string& candidate) { return candidate.front() == '/' ? candidate : "/" + candidate; }

json to_json_set(const EndpointSet& s) {
    json list = json::array();
    for (const auto& e : s.discovered) {
        list.push_back({{"path", e.path}, {"status_code", e.status_code}, {"content_length", e.content_length}});
    }
    return {{"base_url", s.base_url}, {"discovered", list}, {"scanned_at", s.scanned_at},
            {"wordlist_digest", s.wordlist_digest}};
}

EndpointSet from_json_set(const json& j) {
    EndpointSet s;
    s.base_url = j.at("base_url").get<std::string>();
    s.scanned_at = j.at("scanned_at").get<std::string>();
    s.wordlist_digest = j.at("wordlist_digest").get<std::string>();
    for (const auto& e : j.at("discovered")) {
        s.discovered.push_back({e.at("path").get<std::string>(), e.at("status_code").get<int>(),
                                e.at("content_length").get<std::size_t>()});
    }
    return s;
}

} // namespace

EndpointSet discover_endpoints(const std::string& base_url, const std::vector<std::string>& wordlist,
                               const ReconOptions& options) {
    (void)Url::parse(base_url);
    const auto base = base_without_slash(base_url);

    auto probe = [&](const std::string& url) {
        if (options.on_probe) {
            options.on_probe(url);
        }
        HttpRequestSpec spec;
        spec.url = url;
        spec.timeout = options.timeout;
        return http_send(spec);
    };

    try {
        probe(base + "/");
    } catch (const NetworkError& e) {
        throw TargetUnreachableError("target unreachable at " + base_url + ": " + e.what());
    }

    EndpointSet result;
    result.base_url = base_url;
    result.wordlist_digest = wordlist_digest(wordlist);

    std::vector<std::string> paths;
    for (const auto& w : wordlist) {
        auto p = as_path(w);
        if (std::find(paths.begin(), paths.end(), p) == paths.end()) {
            paths.push_back(p);
        }
    }

    std::mutex mu;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < paths.size(); i = next++) {
            try {
                auto res = probe(base + paths[i]);
                if (options.include_statuses.count(res.status)) {
                    std::lock_guard lock(mu);
                    result.discovered.push_back({paths[i], res.status, res.body.size()});
                }
            } catch (const NetworkError&) {
                // a dropped probe is an unobserved status, not an endpoint
            }
        }
    };
    const auto width = static_cast<std::size_t>(std::max(1, options.concurrency_limit));
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < std::min(width, paths.size()); ++t) {
        threads.emplace_back(worker);
    }
    for (auto& t : threads) {
        t.join();
    }
    std::sort(result.discovered.begin(), result.discovered.end());
    result.scanned_at = now_iso8601();
    return result;
}

fs::path endpoint_cache_file(const fs::path& cache_dir, const std::string& base_url) {
    auto url = Url::parse(base_url);
    return cache_dir / (url.host + "_" + std::to_string(url.port) + ".json");
}

EndpointSet cached_endpoints(const std::string& base_url, const std::vector<std::string>& wordlist,
                             const fs::path& cache_dir, const ReconOptions& options, std::vector<std::string>* warnings) {
    const auto file = endpoint_cache_file(cache_dir, base_url);
    const auto digest = wordlist_digest(wordlist);
    std::error_code ec;
    if (fs::exists(file, ec)) {
        try {
            auto cached = from_json_set(json::parse(read_file(file)));
            auto when = parse_iso8601(cached.scanned_at);
            if (!when) {
                throw std::runtime_error("bad scanned_at");
            }
            auto age = std::chrono::system_clock::now() - *when;
            if (cached.base_url == base_url && cached.wordlist_digest == digest && age < options.cache_ttl) {
                return cached;
            }
        } catch (const std::exception& e) {
            if (warnings) {
                warnings->push_back("endpoint cache " + file.string() + " is corrupt (" + e.what() + "); rescanning");
            }
        }
    }
    auto fresh = discover_endpoints(base_url, wordlist, options);
    fs::create_directories(cache_dir, ec);
    write_file_atomic(file, to_json_set(fresh).dump(2));
    return fresh;
}

std::string format_endpoint_inventory(const EndpointSet& s) {
    std::string out;
    for (const auto& e : s.discovered) {
        out += e.path + " " + std::to_string(e.status_code) + " " + std::to_string(e.content_length) + "\n";
    }
    return out;
}

} // namespace vulnval
