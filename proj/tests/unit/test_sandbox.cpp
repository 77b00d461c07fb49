#include "doctest.h"
#include "support.hpp"

#include "vulnval/action_runner.hpp"
#include "vulnval/errors.hpp"
#include "vulnval/sandbox.hpp"
#include "vulnval/util.hpp"

using namespace vulnval;
namespace fs = std::filesystem;

namespace {

const std::set<Authority> kTarget{{"127.0.0.1", 8080}};

bool allowed(const std::string& cmd) {
    try {
        check_command_policy(cmd, default_tool_allowlist(), kTarget);
        return true;
    } catch (const PolicyError&) {
        return false;
    }
}

std::string forbidden_url() { return "http://127.0.0.1:" + std::to_string(vvtest::forbidden_listener().port()) + "/"; }

TargetManifest blackbox_manifest(const std::string& base_url) {
    TargetManifest m;
    m.target_id = "sandbox-test";
    m.base_url = base_url;
    m.mode = ManifestMode::blackbox;
    m.oracle.oracle_id = "o";
    return m;
}

} // namespace

TEST_SUITE("sandbox") {

TEST_CASE("command policy: programs and destinations") {
    CHECK(allowed("curl -s http://127.0.0.1:8080/register | grep nonce"));
    CHECK(allowed("echo hi > out.txt && cat out.txt"));
    CHECK(allowed("X=1 printf '%s' \"$X\""));
    CHECK_FALSE(allowed("python3 -c 'print(1)'"));
    CHECK_FALSE(allowed("nc 127.0.0.1 8080"));
    CHECK_FALSE(allowed("curl http://127.0.0.1:8081/"));
    CHECK_FALSE(allowed("curl http://example.com/"));
    CHECK_FALSE(allowed("curl file:///etc/passwd"));
    CHECK_FALSE(allowed("curl -x http://127.0.0.1:8080 http://127.0.0.1:8080/"));
    CHECK_FALSE(allowed("echo $(id)"));
    CHECK_FALSE(allowed("cat < /dev/tcp/127.0.0.1/9"));
    CHECK_FALSE(allowed("ls; bash -i"));
    CHECK_FALSE(allowed("/usr/bin/wget http://127.0.0.1:8080/"));
}

TEST_CASE("authority parsing") {
    auto a = Authority::parse("127.0.0.1:8080");
    CHECK(a.port == 8080);
    CHECK(a.str() == "127.0.0.1:8080");
    CHECK_THROWS_AS(Authority::parse("127.0.0.1"), std::invalid_argument);
    CHECK_THROWS_AS(Authority::parse("h:99999"), std::invalid_argument);
}

TEST_CASE("local environment confines network, files and programs") {
    auto env = create_env(blackbox_manifest("http://127.0.0.1:8080"), std::nullopt);
    std::vector<std::string> seen;
    env->set_observer([&](std::string_view kind, std::string_view) { seen.emplace_back(kind); });

    CHECK_THROWS_AS(env->http_request("GET", forbidden_url(), {}, ""), PolicyError);
    CHECK_THROWS_AS(env->exec_command("curl -s " + forbidden_url()), PolicyError);
    CHECK_THROWS_AS(env->write_file("../escape.txt", "x"), PolicyError);
    CHECK_THROWS_AS(env->write_file("/tmp/abs.txt", "x"), PolicyError);

    env->write_file("notes/a.txt", "hello");
    auto r = env->exec_command("cat notes/a.txt");
    CHECK(r.exit_code == 0);
    CHECK(r.stdout_text == "hello");
    CHECK(env->interaction_count() == 6);
    CHECK(seen.size() == 6);

    const auto workdir = env->workdir();
    env->destroy();
    CHECK_FALSE(env->alive());
    CHECK_THROWS_AS(env->exec_command("true"), EnvironmentError);
    CHECK_FALSE(fs::exists(workdir));
}

TEST_CASE("command timeout reports exit code 124") {
    EnvironmentSettings s;
    s.command_timeout = std::chrono::milliseconds(300);
    auto env = create_env(blackbox_manifest("http://127.0.0.1:8080"), std::nullopt, s);
    auto r = env->exec_command("sleep 5");
    CHECK(r.timed_out);
    CHECK(r.exit_code == kTimeoutExitCode);
    env->destroy();
}

TEST_CASE("the listener authority is allowlisted alongside the target") {
    auto env = create_env(blackbox_manifest("http://127.0.0.1:8080"), Authority{"127.0.0.1", 9999});
    CHECK(env->network_allowlist().count({"127.0.0.1", 8080}));
    CHECK(env->network_allowlist().count({"127.0.0.1", 9999}));
    CHECK(env->network_allowlist().size() == 2);
    env->destroy();
}

TEST_CASE("grey-box workdir holds a read-only source copy") {
    auto fixture = vvtest::start(FixtureName::regrole);
    auto env = create_env(fixture->manifest(), std::nullopt);
    const auto& hint = *fixture->manifest().hint;
    auto r = env->exec_command("find . -name '*.php' | head -n 50");
    CHECK(r.stdout_text.find(fs::path(hint.file_path).filename().string()) != std::string::npos);
    env->destroy();
}

TEST_CASE("run_action records every interaction in the trace and extracts values") {
    auto fixture = vvtest::start(FixtureName::regrole);
    auto env = create_env(fixture->manifest(), std::nullopt);
    ExecutionTrace trace;
    trace.run_id = "t";
    Variables vars{{"TARGET", fixture->base_url()}};
    auto a = parse_action("REQUEST: GET /register\nEXTRACT: nonce <- body /name=\"_wpnonce\" value=\"([0-9a-f]+)\"/");
    auto o = run_action(*env, a, vars, trace);
    CHECK(o.ok);
    CHECK(o.response->status == 200);
    CHECK(vars.count("nonce"));

    auto blocked = run_action(*env, parse_action("REQUEST: GET " + forbidden_url()), vars, trace);
    CHECK_FALSE(blocked.ok);
    CHECK(blocked.error.rfind("policy:", 0) == 0);

    auto denied = run_action(*env, parse_action("RUN: python3 -V"), vars, trace);
    CHECK_FALSE(denied.ok);
    CHECK(denied.command->exit_code == 126);

    CHECK(trace.interaction_count() == env->interaction_count());
    CHECK_FALSE(check_trace(trace).has_value());
    env->destroy();
}

TEST_CASE("expand_action joins relative URLs to the target") {
    Action a = parse_action("REQUEST: POST /x?n={{n}}\nBODY: v={{n}}&w={{unknown}}");
    auto e = expand_action(a, {{"TARGET", "http://127.0.0.1:1"}, {"n", "7"}});
    CHECK(e.url == "http://127.0.0.1:1/x?n=7");
    CHECK(e.body == "v=7&w={{unknown}}");
}

}
