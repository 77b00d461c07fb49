#include "doctest.h"
#include "support.hpp"

#include "vulnval/errors.hpp"
#include "vulnval/llm_backend.hpp"
#include "vulnval/llm_stub.hpp"
#include "vulnval/util.hpp"

#include <cstdlib>

using namespace vulnval;
namespace fs = std::filesystem;

namespace {

Conversation convo(const std::string& user) { return Conversation::start("system").user(user); }

const char* kScript = R"(header text is ignored
=== strategist 0
# comment right after the header
DECISION: ABORT
REASON: first

=== strategist 1
DECISION: ABORT
REASON: second

=== explorer 0
ANSWER: none
)";

} // namespace

TEST_SUITE("llm_backend") {

TEST_CASE("conversation shape is validated") {
    auto c = convo("hi");
    CHECK_NOTHROW(c.validate());
    CHECK(c.last_user() == "hi");
    Conversation bad;
    bad.user("no system");
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    auto twice = convo("x");
    twice.assistant("a").assistant("b");
    CHECK_THROWS_AS(twice.validate(), std::invalid_argument);
}

TEST_CASE("prompt digests ignore run-specific values and whitespace") {
    PromptNormalizer a, b;
    a.add("http://127.0.0.1:4001", "{{TARGET}}");
    b.add("http://127.0.0.1:5002", "{{TARGET}}");
    CHECK(prompt_digest("GET http://127.0.0.1:4001/x  now", a) == prompt_digest("GET  http://127.0.0.1:5002/x now", b));
    CHECK(prompt_digest("GET /x", a) != prompt_digest("GET /y", a));
    CHECK(prompt_digest("abc", {}) == sha256_hex("abc"));
}

TEST_CASE("backend config validation per mode") {
    BackendConfig c;
    c.mode = BackendMode::replay;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.cassette_path = "x.ndjson";
    CHECK_NOTHROW(c.validate());
    c.mode = BackendMode::live;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.endpoint_url = "http://127.0.0.1:1/v1/chat/completions";
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("cassette appends skip duplicate keys and persist") {
    vvtest::TempDir dir;
    const auto path = dir / "c.ndjson";
    {
        Cassette c(path);
        CHECK(c.append({"strategist", 0, "d0", "ex", "reply"}));
        CHECK_FALSE(c.append({"strategist", 0, "d0", "ex", "other"}));
        CHECK(c.append({"strategist", 1, "d0", "ex", "reply2"}));
    }
    Cassette reloaded(path);
    CHECK(reloaded.size() == 2);
    REQUIRE(reloaded.find("strategist", 1, "d0"));
    CHECK(reloaded.find("strategist", 1, "d0")->response == "reply2");
    CHECK(reloaded.find("explorer", 0, "d0") == nullptr);
}

TEST_CASE("replay keys on role, per-role turn and prompt digest") {
    vvtest::TempDir dir;
    const auto path = dir / "c.ndjson";
    {
        Cassette c(path);
        c.append({"strategist", 0, prompt_digest("first", {}), "", "A"});
        c.append({"strategist", 1, prompt_digest("second", {}), "", "B"});
        c.append({"explorer", 0, prompt_digest("q", {}), "", "C"});
    }
    ReplayBackend backend(path);
    backend.begin_run({});
    CHECK(backend.complete(convo("first"), AgentRole::strategist).content == "A");
    CHECK(backend.complete(convo("q"), AgentRole::explorer).content == "C");
    CHECK(backend.turns_taken(AgentRole::strategist) == 1);
    CHECK_THROWS_AS(backend.complete(convo("changed prompt"), AgentRole::strategist), CassetteMissError);

    // begin_run resets the turn counters.
    backend.begin_run({});
    CHECK(backend.complete(convo("first"), AgentRole::strategist).content == "A");
    CHECK(backend.complete(convo("second"), AgentRole::strategist).content == "B");
}

TEST_CASE("reply scripts parse headers, comments and trailing blanks") {
    auto s = parse_script(kScript);
    REQUIRE(s.find("strategist", 0));
    CHECK(*s.find("strategist", 0) == "DECISION: ABORT\nREASON: first");
    CHECK(*s.find("explorer", 0) == "ANSWER: none");
    CHECK(s.find("exploiter", 0) == nullptr);
    CHECK_THROWS_AS(parse_script("=== strategist x\nhi\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_script("=== strategist 0\na\n=== strategist 0\nb\n"), std::invalid_argument);
    CHECK_NOTHROW(load_script(vvtest::script("regrole")));
}

TEST_CASE("scripted backend answers by role and turn") {
    ScriptedBackend b(parse_script(kScript));
    b.begin_run({});
    CHECK(b.complete(convo("x"), AgentRole::strategist).content.find("first") != std::string::npos);
    CHECK(b.complete(convo("y"), AgentRole::strategist).content.find("second") != std::string::npos);
    CHECK_THROWS_AS(b.complete(convo("z"), AgentRole::strategist), CassetteMissError);
}

TEST_CASE("record against the stub server, then replay offline") {
    LlmStubServer stub(parse_script(kScript));
    stub.start();
    setenv("VULNVAL_API_KEY", "stub", 0);
    vvtest::TempDir dir;
    BackendConfig config;
    config.mode = BackendMode::record;
    config.endpoint_url = stub.endpoint_url();
    config.cassette_path = dir / "rec.ndjson";
    {
        RecordingBackend rec(config);
        rec.begin_run({});
        CHECK(rec.complete(convo("p1"), AgentRole::strategist).content.find("first") != std::string::npos);
        CHECK(rec.complete(convo("p2"), AgentRole::explorer).content == "ANSWER: none");
        CHECK(rec.cassette_size() == 2);
    }
    stub.stop();
    ReplayBackend replay(dir / "rec.ndjson");
    replay.begin_run({});
    CHECK(replay.complete(convo("p1"), AgentRole::strategist).content.find("first") != std::string::npos);
    CHECK(replay.complete(convo("p2"), AgentRole::explorer).content == "ANSWER: none");
}

TEST_CASE("live backend maps transport and status failures") {
    BackendConfig config;
    config.mode = BackendMode::live;
    config.request_timeout = std::chrono::seconds(2);
    setenv("VULNVAL_API_KEY", "stub", 0);
    config.endpoint_url = "http://127.0.0.1:9/v1/chat/completions";
    LiveBackend live(config);
    live.begin_run({});
    CHECK_THROWS_AS(live.complete(convo("x"), AgentRole::strategist), TransportError);

    LlmStubServer stub(Script{});
    stub.start();
    config.endpoint_url = stub.endpoint_url();
    LiveBackend missing(config);
    missing.begin_run({});
    CHECK_THROWS_AS(missing.complete(convo("x"), AgentRole::strategist), BackendError);
    stub.stop();
}

}
