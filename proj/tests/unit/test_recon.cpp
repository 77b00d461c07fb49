#include "doctest.h"
#include "support.hpp"

#include "vulnval/errors.hpp"
#include "vulnval/recon.hpp"
#include "vulnval/util.hpp"

#include <atomic>

using namespace vulnval;
namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kWords{"register", "login", "profile", "nope", "health"};

std::vector<std::string> paths_of(const EndpointSet& s) {
    std::vector<std::string> out;
    for (const auto& e : s.discovered) out.push_back(e.path);
    return out;
}

} // namespace

TEST_SUITE("recon") {

TEST_CASE("wordlists skip comments and blanks; the digest tracks order") {
    auto w = parse_wordlist("# c\nadmin\n\n /api \nadmin\n");
    CHECK(w == std::vector<std::string>{"admin", "api"});
    CHECK(wordlist_digest({"a", "b"}) != wordlist_digest({"b", "a"}));
    CHECK(wordlist_digest(w) == wordlist_digest(parse_wordlist("admin\napi\n")));
    CHECK(default_wordlist().size() > 20);
}

TEST_CASE("discovery keeps interesting statuses, sorted and unique") {
    auto fixture = vvtest::start(FixtureName::regrole);
    std::atomic<int> probes{0};
    ReconOptions o;
    o.on_probe = [&](const std::string&) { ++probes; };
    auto set = discover_endpoints(fixture->base_url(), kWords, o);
    CHECK(paths_of(set) == std::vector<std::string>{"/health", "/login", "/profile", "/register"});
    CHECK(probes == static_cast<int>(kWords.size()) + 1);
    CHECK(set.wordlist_digest == wordlist_digest(kWords));
    for (const auto& e : set.discovered) CHECK(o.include_statuses.count(e.status_code));
    auto inv = format_endpoint_inventory(set);
    CHECK(inv.find("/register 200") != std::string::npos);
}

TEST_CASE("unreachable and malformed targets") {
    CHECK_THROWS_AS(discover_endpoints("http://127.0.0.1:9", kWords), TargetUnreachableError);
    CHECK_THROWS_AS(discover_endpoints("not a url", kWords), std::invalid_argument);
}

TEST_CASE("cache is reused within the TTL and rebuilt when corrupt") {
    auto fixture = vvtest::start(FixtureName::regrole);
    vvtest::TempDir cache;
    std::atomic<int> probes{0};
    ReconOptions o;
    o.on_probe = [&](const std::string&) { ++probes; };
    auto first = cached_endpoints(fixture->base_url(), kWords, cache.path(), o);
    const int after_first = probes;
    auto second = cached_endpoints(fixture->base_url(), kWords, cache.path(), o);
    CHECK(probes == after_first);
    CHECK(first == second);

    write_file_atomic(endpoint_cache_file(cache.path(), fixture->base_url()), "{broken");
    std::vector<std::string> warnings;
    auto third = cached_endpoints(fixture->base_url(), kWords, cache.path(), o, &warnings);
    CHECK(probes > after_first);
    CHECK(third == first);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("corrupt") != std::string::npos);

    // A different wordlist never reuses the cached set.
    const int before = probes;
    cached_endpoints(fixture->base_url(), {"register"}, cache.path(), o);
    CHECK(probes > before);
}

}
