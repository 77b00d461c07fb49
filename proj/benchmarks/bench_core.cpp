#include "vulnval/agents.hpp"
#include "vulnval/llm_backend.hpp"
#include "vulnval/metrics.hpp"
#include "vulnval/sandbox.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace vulnval;

namespace {

std::vector<RunRecord> synthetic_records(int targets, int runs) {
    std::mt19937 rng(7);
    std::vector<RunRecord> out;
    for (int t = 0; t < targets; ++t) {
        for (int k = 1; k <= runs; ++k) {
            RunRecord r;
            r.target_id = "t" + std::to_string(t);
            r.run_index = k;
            r.max_attempts = 5;
            r.success = rng() % 3 == 0;
            r.attempts_used = r.success ? 1 + static_cast<int>(rng() % 5) : 5;
            if (r.success) r.tca = r.attempts_used;
            r.loop_summaries.assign(r.attempts_used, "loop");
            out.push_back(std::move(r));
        }
    }
    return out;
}

void BM_SummarizeRecords(benchmark::State& state) {
    auto records = synthetic_records(static_cast<int>(state.range(0)), 5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(summarize_records(records, 5));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(records.size()));
}
BENCHMARK(BM_SummarizeRecords)->Arg(40)->Arg(400)->Arg(4000);

void BM_PromptDigest(benchmark::State& state) {
    std::string prompt;
    while (prompt.size() < static_cast<std::size_t>(state.range(0))) {
        prompt += "GET http://127.0.0.1:41234/register returned 200 with a nonce field.\n";
    }
    PromptNormalizer n;
    n.add("http://127.0.0.1:41234", "{{TARGET}}");
    for (auto _ : state) {
        benchmark::DoNotOptimize(prompt_digest(prompt, n));
    }
    state.SetBytesProcessed(state.iterations() * static_cast<int64_t>(prompt.size()));
}
BENCHMARK(BM_PromptDigest)->Arg(1 << 10)->Arg(1 << 14)->Arg(1 << 17);

void BM_ParseAction(benchmark::State& state) {
    const std::string text = "REQUEST: POST /register\nHEADER: Content-Type: application/x-www-form-urlencoded\n"
                             "BODY: fp_registration=1&_wpnonce={{nonce}}&user_login=eve&role=administrator\n"
                             "EXTRACT: session <- header:Set-Cookie /fp_session=([0-9a-f]+)/";
    for (auto _ : state) {
        benchmark::DoNotOptimize(parse_action(text));
    }
}
BENCHMARK(BM_ParseAction);

void BM_ParseEnvelope(benchmark::State& state) {
    const std::string text = "DECISION: EXECUTE\nPLAN: register as administrator\n"
                             "STEP 1 [http]: load the form\n  REQUEST: GET /register\n  EXPECT: 200\n"
                             "STEP 2 [http]: submit\n  REQUEST: POST /register\n  BODY: role=administrator\n";
    for (auto _ : state) {
        benchmark::DoNotOptimize(parse_agent_envelope(text));
    }
}
BENCHMARK(BM_ParseEnvelope);

void BM_CommandPolicy(benchmark::State& state) {
    const auto tools = default_tool_allowlist();
    const std::set<Authority> net{{"127.0.0.1", 8080}};
    const std::string cmd = "curl -s -X POST -H 'Content-Type: application/json' -d '{\"a\":1}' "
                            "http://127.0.0.1:8080/v1/tools/run | jq -r .output | grep -o 'secret_[0-9a-f]*'";
    for (auto _ : state) {
        check_command_policy(cmd, tools, net);
    }
}
BENCHMARK(BM_CommandPolicy);

} // namespace

BENCHMARK_MAIN();
