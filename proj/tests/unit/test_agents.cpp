#include "doctest.h"
#include "support.hpp"

#include "vulnval/agents.hpp"
#include "vulnval/errors.hpp"
#include "vulnval/llm_stub.hpp"
#include "vulnval/util.hpp"

using namespace vulnval;
namespace fs = std::filesystem;

namespace {

Script script(const std::string& text) { return parse_script(text); }

} // namespace

TEST_SUITE("agents") {

TEST_CASE("EXPLORE envelope carries numbered questions") {
    auto e = parse_agent_envelope("Thinking...\nDECISION: EXPLORE\nQ1: where is the nonce checked?\nQ2: which roles exist?\n");
    CHECK(e.decision == Decision::explore);
    CHECK(e.questions == std::vector<std::string>{"where is the nonce checked?", "which roles exist?"});
}

TEST_CASE("EXECUTE envelope builds a plan with payload lines") {
    auto e = parse_agent_envelope("```\nDECISION: EXECUTE\nPLAN: become admin\nSTEP 1 [http]: load form\n"
                                  "  REQUEST: GET /register\n  EXPECT: 200\nSTEP 2 [shell]: list\n  RUN: ls\n```");
    CHECK(e.decision == Decision::execute);
    CHECK(e.plan.objective == "become admin");
    REQUIRE(e.plan.steps.size() == 2);
    CHECK(e.plan.steps[0].description == "load form");
    CHECK(e.plan.steps[0].payload == "load form\n  REQUEST: GET /register");
    CHECK(e.plan.steps[0].expected_signal == "200");
    CHECK(e.plan.steps[1].action_kind == ActionKind::shell);
    CHECK(parse_agent_envelope(render_plan(e.plan).insert(0, "DECISION: EXECUTE\n")).plan == e.plan);
}

TEST_CASE("envelope format errors") {
    CHECK_THROWS_AS(parse_agent_envelope("no decision here"), EnvelopeError);
    CHECK_THROWS_AS(parse_agent_envelope("DECISION: MAYBE"), EnvelopeError);
    try {
        parse_agent_envelope("DECISION: EXECUTE\nQ1: what?\n");
        FAIL("accepted a mismatched payload");
    } catch (const EnvelopeError& e) {
        CHECK(std::string(e.what()).find("decision/payload mismatch") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_agent_envelope("DECISION: ABORT\n"), EnvelopeError);
    CHECK_THROWS_AS(parse_agent_envelope("DECISION: EXECUTE\nPLAN: x\nSTEP 2 [http]: y\n  REQUEST: GET /\n"),
                    EnvelopeError);
}

TEST_CASE("request_envelope re-prompts once with the format reminder") {
    ScriptedBackend b(script("=== strategist 0\nnot an envelope\n=== strategist 1\nDECISION: ABORT\nREASON: done\n"));
    b.begin_run({});
    auto c = Conversation::start("sys").user("decide");
    auto e = request_envelope(b, c, AgentRole::strategist);
    CHECK(e.decision == Decision::abort);
    CHECK(c.messages.size() == 5);
    CHECK(c.messages[3].content.find(kEnvelopeReminder) != std::string::npos);

    ScriptedBackend twice(script("=== strategist 0\nbad\n=== strategist 1\nstill bad\n"));
    twice.begin_run({});
    auto c2 = Conversation::start("sys").user("decide");
    CHECK_THROWS_AS(request_envelope(twice, c2, AgentRole::strategist), EnvelopeError);
}

TEST_CASE("explorer replies: tool calls, answers and citations") {
    auto t = parse_explorer_reply("TOOL: read_file \"src/a b.php\" 1-20");
    CHECK(t.kind == ExplorerReply::Kind::tool);
    CHECK(t.tool == "read_file");
    CHECK(t.args == std::vector<std::string>{"src/a b.php", "1-20"});
    auto a = parse_explorer_reply("ANSWER: the role comes from POST\nCITE: app.php:3-9");
    CHECK(a.kind == ExplorerReply::Kind::answer);
    REQUIRE(a.citations.size() == 1);
    CHECK(a.citations[0] == std::tuple<std::string, int, int>{"app.php", 3, 9});
    CHECK_THROWS_AS(parse_explorer_reply("TOOL: rm -rf /"), EnvelopeError);
    CHECK_THROWS_AS(parse_explorer_reply("hello"), EnvelopeError);
}

TEST_CASE("source tools are deterministic and never throw") {
    vvtest::TempDir dir;
    write_file_atomic(dir / "app.php", "line1\nneedle\nline3\n");
    SourceTree tree(dir.path());
    CHECK(run_source_tool(tree, "list_dir", {}) == "app.php");
    CHECK(run_source_tool(tree, "read_file", {"app.php", "2-2"}) == "2| needle\n");
    CHECK(run_source_tool(tree, "search_text", {"needle"}).find("app.php:2") != std::string::npos);
    CHECK(run_source_tool(tree, "path_exists", {"nope"}).rfind("does not exist", 0) == 0);
    CHECK(run_source_tool(tree, "read_file", {"../../etc/passwd"}).rfind("error:", 0) == 0);
    CHECK(run_source_tool(tree, "read_file", {"app.php", "x"}).rfind("error:", 0) == 0);
}

TEST_CASE("explorer answer respects the tool budget and attaches cited snippets") {
    vvtest::TempDir dir;
    write_file_atomic(dir / "app.php", "a\nb\nc\nd\n");
    SourceTree tree(dir.path());
    ScriptedBackend ok(script("=== explorer 0\nTOOL: list_dir\n=== explorer 1\nANSWER: b is on line 2\nCITE: app.php:2-3\n"));
    ok.begin_run({});
    auto e = explorer_answer("where is b?", tree, ok, 4, 0);
    CHECK(e.kind == ContextKind::qa);
    CHECK_FALSE(e.incomplete);
    REQUIRE(e.excerpts.size() == 1);
    CHECK(e.excerpts[0].text.find("b") != std::string::npos);

    ScriptedBackend looping(script("=== explorer 0\nTOOL: list_dir\n=== explorer 1\nTOOL: list_dir\n"
                                   "=== explorer 2\nTOOL: list_dir\n"));
    looping.begin_run({});
    auto partial = explorer_answer("q", tree, looping, 2, 0);
    CHECK(partial.incomplete);
    CHECK(looping.turns_taken(AgentRole::explorer) <= 3);
}

TEST_CASE("exploiter replies") {
    auto a = parse_exploiter_reply("ACTION:\nREQUEST: GET /x\nEXTRACT: n <- body /v=(\\d+)/");
    CHECK(a.kind == ExploiterReply::Kind::action);
    CHECK(a.action.url == "/x");
    REQUIRE(a.action.extracts.size() == 1);
    auto o = parse_exploiter_reply("OUTCOME: FAILURE\nOBSERVATION: 404\nANALYSIS: wrong depth");
    CHECK(o.kind == ExploiterReply::Kind::outcome);
    CHECK_FALSE(o.success);
    CHECK(o.observations == std::vector<std::string>{"404"});
    CHECK(o.analysis == "wrong depth");
    CHECK_THROWS_AS(parse_exploiter_reply("OUTCOME: PARTIAL"), EnvelopeError);
    CHECK_THROWS_AS(parse_exploiter_reply("ACTION:\nFOO: bar"), EnvelopeError);
}

TEST_CASE("summarize_output passes short text and falls back to truncation") {
    ScriptedBackend none(Script{});
    none.begin_run({});
    CHECK(summarize_output("short", none, 100) == "short");
    const std::string big(5000, 'x');
    auto s = summarize_output(big, none, 300);
    CHECK(s.size() <= 300);
    ScriptedBackend good(script("=== summarizer 0\nmostly x\n"));
    good.begin_run({});
    CHECK(summarize_output(big, good, 300) == "mostly x");
}

TEST_CASE("black-box strategist prompt omits the hint") {
    TargetManifest m;
    m.target_id = "t";
    m.base_url = "http://127.0.0.1:1";
    m.hint = VulnerabilityHint{"CWE-269", "secret/path.php", 1, 2, std::nullopt};
    WorkingContext ctx;
    StrategistInput in;
    in.manifest = &m;
    in.context = &ctx;
    CHECK(strategist_prompt(in).find("secret/path.php") != std::string::npos);
    in.blackbox = true;
    CHECK(strategist_prompt(in).find("secret/path.php") == std::string::npos);
    CHECK(strategist_prompt(in).find("CWE-269") == std::string::npos);
}

}
