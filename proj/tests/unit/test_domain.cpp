#include "doctest.h"
#include "support.hpp"

#include "vulnval/errors.hpp"
#include "vulnval/source_tree.hpp"
#include "vulnval/util.hpp"

#include <random>

using namespace vulnval;
namespace fs = std::filesystem;

namespace {

const char* kManifest = R"({
  "target_id": "demo",
  "base_url": "http://127.0.0.1:8080",
  "attack_type": "privilege_escalation",
  "mode": "greybox",
  "source_root": "src",
  "hint": {"cwe_id": "CWE-269", "file_path": "app.php", "line_start": 2, "line_end": 3},
  "oracle": {"oracle_id": "demo-admin", "kind": "privilege_escalation", "params": {"probe_request": "GET /users", "admin_marker": "role=administrator"}},
  "reset_hook": "http:POST /__reset"
})";

ManifestParseOptions no_fs() {
    ManifestParseOptions o;
    o.check_filesystem = false;
    return o;
}

std::string with(std::string doc, const std::string& from, const std::string& to) {
    return replace_all(std::move(doc), from, to);
}

} // namespace

TEST_SUITE("domain") {

TEST_CASE("enum spellings round-trip and unknown spellings are rejected") {
    for (auto v : {AttackType::database_access, AttackType::file_access, AttackType::outbound_service,
                   AttackType::denial_of_service}) {
        CHECK(parse_attack_type(to_string(v)) == v);
    }
    for (auto v : {AgentRole::strategist, AgentRole::explorer, AgentRole::exploiter, AgentRole::poc_gen,
                   AgentRole::summarizer}) {
        CHECK(parse_agent_role(to_string(v)) == v);
    }
    CHECK(parse_engine_mode("greybox-multi") == EngineMode::greybox_multi);
    CHECK(parse_engine_mode("blackbox") == EngineMode::blackbox_multi);
    CHECK(parse_engine_mode("greybox_single") == EngineMode::greybox_single);
    CHECK_THROWS_AS(parse_attack_type("rce"), std::invalid_argument);
    CHECK_THROWS_AS(parse_trace_kind(""), std::invalid_argument);
}

TEST_CASE("manifest parses and serializes losslessly") {
    auto m = parse_target_manifest(kManifest, no_fs());
    CHECK(m.target_id == "demo");
    CHECK(m.hint->line_end == 3);
    CHECK(m.oracle.params.at("probe_request") == "GET /users");
    CHECK(parse_target_manifest(serialize_target_manifest(m), no_fs()) == m);
}

TEST_CASE("manifest errors name the offending field") {
    auto field_of = [](const std::string& doc) {
        try {
            parse_target_manifest(doc, no_fs());
        } catch (const ManifestError& e) {
            return e.field_path();
        }
        return std::string("<accepted>");
    };
    CHECK(field_of(with(kManifest, "\"line_start\": 2, \"line_end\": 3", "\"line_start\": 5, \"line_end\": 3")) ==
          "hint.line_end");
    CHECK(field_of(with(kManifest, "CWE-269\"", "269\"")) == "hint.cwe_id");
    CHECK(field_of(with(kManifest, "\"app.php\"", "\"../app.php\"")) == "hint.file_path");
    CHECK(field_of(with(kManifest, "http://127.0.0.1:8080", "ftp://x")) == "base_url");
    CHECK(field_of("[1,2]") != "<accepted>");
    CHECK(field_of("{not json") != "<accepted>");
}

TEST_CASE("grey-box manifests need source and hint; the filesystem check finds the hint file") {
    vvtest::TempDir dir;
    fs::create_directories(dir / "src");
    write_file_atomic(dir / "src/app.php", "<?php\n$a = 1;\n$b = 2;\n");
    ManifestParseOptions o;
    o.base_dir = dir.path();
    auto m = parse_target_manifest(kManifest, o);
    CHECK(m.source_root == dir / "src");
    CHECK_THROWS_AS(parse_target_manifest(with(kManifest, "app.php", "missing.php"), o), ManifestError);

    auto bb = blackbox_view(m);
    CHECK_FALSE(bb.source_root.has_value());
    CHECK_FALSE(bb.hint.has_value());
    CHECK(bb.mode == ManifestMode::blackbox);
}

TEST_CASE("source tree stays inside its root and clamps ranges") {
    vvtest::TempDir dir;
    write_file_atomic(dir / "a.txt", "one\ntwo\nthree\n");
    fs::create_directories(dir / "sub");
    write_file_atomic(dir / "sub/b.txt", "needle here\n");
    int reads = 0;
    SourceTree tree(dir.path(), [&](std::string_view, const std::string&) { ++reads; });
    CHECK_THROWS_AS(tree.read_file("../etc/passwd"), SourceError);
    CHECK_THROWS_AS(tree.read_file("/etc/passwd"), SourceError);
    auto snip = tree.extract("a.txt", 2, 9);
    CHECK(snip.clamped);
    CHECK(snip.line_end == 3);
    CHECK(snip.text.find("two") != std::string::npos);
    auto hits = tree.search_text("needle");
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].file_path == "sub/b.txt");
    CHECK(reads >= 2);
}

TEST_CASE("action text round-trips through render and parse") {
    Action a;
    a.kind = ActionKind::http;
    a.method = "POST";
    a.url = "/register";
    a.headers = {{"Content-Type", "application/x-www-form-urlencoded"}};
    a.body = "a=1&_wpnonce={{nonce}}";
    a.extracts = {{"nonce", "body", "value=\"([0-9a-f]+)\""}};
    CHECK(parse_action(render_action(a)) == a);

    Action s;
    s.kind = ActionKind::shell;
    s.command = "curl -s {{TARGET}}/";
    CHECK(parse_action(render_action(s)) == s);

    Action w;
    w.kind = ActionKind::write_file;
    w.path = "exploit.py";
    w.content = "print(1)\nprint(2)";
    CHECK(parse_action(render_action(w)) == w);

    CHECK_THROWS_AS(parse_action("HELLO: world"), std::invalid_argument);
    CHECK_THROWS_AS(parse_action(""), std::invalid_argument);
}

TEST_CASE("property: random http actions survive render/parse") {
    std::mt19937 rng(11);
    const std::string alphabet = "abcdefXYZ0123456789=&{}-_./:";
    // Header names are HTTP tokens, so they never contain ':'.
    const std::string token_alphabet = "abcdefXYZ0123456789-_.";
    auto word_from = [&](const std::string& letters, int n) {
        std::string s;
        for (int i = 0; i < n; ++i) s += letters[rng() % letters.size()];
        return s;
    };
    auto word = [&](int n) { return word_from(alphabet, n); };
    for (int i = 0; i < 300; ++i) {
        Action a;
        a.method = (rng() % 2) ? "GET" : "POST";
        a.url = "/" + word(1 + rng() % 10);
        for (int h = rng() % 3; h > 0; --h) a.headers.emplace_back("X-" + word_from(token_alphabet, 3), word(5));
        if (rng() % 2) a.body = word(1 + rng() % 20);
        CHECK(parse_action(render_action(a)) == a);
    }
}

TEST_CASE("plans need at least one step with a payload") {
    ExploitPlan p;
    p.objective = "x";
    CHECK_THROWS_AS(validate_plan(p), std::invalid_argument);
    p.steps.push_back({"s", ActionKind::http, "", ""});
    CHECK_THROWS_AS(validate_plan(p), std::invalid_argument);
    p.steps[0].payload = "REQUEST: GET /";
    CHECK_NOTHROW(validate_plan(p));
}

TEST_CASE("trace appends strictly increasing seq and counts interactions") {
    ExecutionTrace t;
    t.run_id = "r1";
    t.append(TraceKind::note, "plan");
    t.append(TraceKind::http_request, "GET /");
    t.append(TraceKind::http_response, "HTTP 200");
    t.append(TraceKind::command, "ls", 0);
    t.append(TraceKind::stdout_text, "a");
    CHECK(t.interaction_count() == 2);
    CHECK_FALSE(check_trace(t).has_value());
    for (std::size_t i = 1; i < t.events.size(); ++i) CHECK(t.events[i].seq == t.events[i - 1].seq + 1);

    auto back = parse_trace_ndjson(serialize_trace_ndjson(t), "r1");
    CHECK(back.events == t.events);

    ExecutionTrace bad = t;
    bad.events[2].seq = 1;
    CHECK(check_trace(bad).has_value());
    ExecutionTrace orphan;
    orphan.append(TraceKind::http_response, "HTTP 200");
    CHECK(check_trace(orphan).has_value());
}

TEST_CASE("run record invariants and NDJSON round-trip") {
    auto ok = vvtest::record("a", 1, 2);
    ok.loop_summaries = {"loop 1: x", "loop 2: y"};
    CHECK_NOTHROW(validate_run_record(ok));
    CHECK(parse_run_record(serialize_run_record(ok)) == ok);

    auto bad = ok;
    bad.tca.reset();
    CHECK_THROWS_AS(validate_run_record(bad), std::invalid_argument);
    bad = ok;
    bad.tca = 4;
    CHECK_THROWS_AS(validate_run_record(bad), std::invalid_argument);
    bad = ok;
    bad.attempts_used = 6;
    CHECK_THROWS_AS(validate_run_record(bad), std::invalid_argument);

    vvtest::TempDir dir;
    append_record(dir / "r.ndjson", ok);
    auto infra = vvtest::record("b", 1, std::nullopt);
    infra.infra_failure = true;
    infra.failure_reason = "reset failed";
    append_record(dir / "r.ndjson", infra);
    auto back = read_records(dir / "r.ndjson");
    REQUIRE(back.size() == 2);
    CHECK(back[1] == infra);
}

TEST_CASE("working context is append-only with non-decreasing loops") {
    WorkingContext c;
    c.append({0, ContextKind::observation, std::nullopt, "a", {}, false});
    c.append({1, ContextKind::qa, std::string("q?"), "b", {}, false});
    CHECK_THROWS_AS(c.append({0, ContextKind::observation, std::nullopt, "c", {}, false}), std::invalid_argument);
    CHECK(c.size() == 2);
    CHECK(c.of_kind(ContextKind::qa).size() == 1);
}

TEST_CASE("utility helpers") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(collapse_whitespace("  a \n\t b  ") == "a b");
    CHECK(truncate_middle(std::string(100, 'x'), 40).size() <= 40);
    CHECK(expand_placeholders("{{a}}-{{b}}", {{"a", "1"}}) == "1-{{b}}");
    CHECK(render_template("${a}${zz}", {{"a", "1"}}) == "1");
    CHECK(url_decode(url_encode("a b&c=d/é")) == "a b&c=d/é");
    auto u = Url::parse("http://127.0.0.1:81/x?y=1");
    CHECK(u.port == 81);
    CHECK(u.path == "/x?y=1");
    CHECK(Url::parse("https://h/").port == 443);
    CHECK_THROWS_AS(Url::parse("file:///etc/passwd"), std::invalid_argument);
}

}
