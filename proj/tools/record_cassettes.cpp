// Records a cassette by running the engine in record mode against a fresh fixture,
// with the scripted stub server standing in for the model, then replays it once
// against a reset fixture to check the cassette is self-consistent.

#include "vulnval/engine.hpp"
#include "vulnval/errors.hpp"
#include "vulnval/fixtures.hpp"
#include "vulnval/harness.hpp"
#include "vulnval/llm_stub.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace vulnval;

namespace {

struct Outcome {
    RunRecord record;
    bool poc = false;
};

Outcome run_once(LlmBackend& backend, FixtureTarget& fixture, EngineOptions options) {
    std::unique_ptr<CallbackListener> listener;
    if (fixture.manifest().oracle.kind == AttackType::outbound_service) {
        listener = std::make_unique<CallbackListener>();
        listener->start();
        options.callback_url = callback_url_for(fixture.manifest(), *listener);
    }
    Evaluator evaluator(listener.get());
    std::optional<KnowledgeStore> store;
    auto knowledge = fs::temp_directory_path() / ("vulnval-record-" + random_hex(4));
    if (options.mode == EngineMode::greybox_single) {
        store.emplace(knowledge_file(knowledge, fixture.manifest().target_id));
    }
    std::optional<Authority> auth;
    if (listener) auth = listener->authority();
    auto result = run_engine(fixture.manifest(), options, backend, default_env_factory(auth), evaluator,
                             store ? &*store : nullptr);
    fs::remove_all(knowledge);
    if (result.poc_error) {
        std::cerr << "  poc error: " << *result.poc_error << "\n";
    }
    return {result.record, result.poc.has_value()};
}

void print(const char* label, const Outcome& o) {
    std::cout << label << ": " << (o.record.success ? "success" : "failure") << ", loops "
              << o.record.attempts_used << ", tca " << (o.record.tca ? std::to_string(*o.record.tca) : "-")
              << ", poc " << (o.poc ? "yes" : "no");
    if (o.record.failure_reason) std::cout << ", reason: " << *o.record.failure_reason;
    std::cout << "\n";
    for (const auto& s : o.record.loop_summaries) std::cout << "  " << s << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Record a cassette from a reply script against a fixture", "record_cassettes"};
    std::string script_path, cassette_path, fixture_name = "regrole", variant = "file_access", mode = "greybox-multi";
    std::uint64_t seed = 1337;
    int max_attempts = 5;
    app.add_option("--script", script_path, "Reply script")->required();
    app.add_option("--cassette", cassette_path, "Cassette to write (replaced)")->required();
    app.add_option("--fixture", fixture_name, "Fixture")->check(CLI::IsMember({"regrole", "toolexec", "fileserve"}));
    app.add_option("--variant", variant, "fileserve variant");
    app.add_option("--mode", mode, "Engine mode")->check(CLI::IsMember({"greybox-multi", "greybox-single", "blackbox"}));
    app.add_option("--seed", seed, "Fixture seed");
    app.add_option("--max-attempts", max_attempts, "Loops per run");
    CLI11_PARSE(app, argc, argv);

    const std::map<std::string, EngineMode> modes{{"greybox-multi", EngineMode::greybox_multi},
                                                  {"greybox-single", EngineMode::greybox_single},
                                                  {"blackbox", EngineMode::blackbox_multi}};
    try {
        FixtureOptions fo;
        fo.name = parse_fixture_name(fixture_name);
        fo.seed = seed;
        fo.variant = variant;
        auto fixture = start_fixture(fo);

        LlmStubServer stub(load_script(script_path));
        stub.start();

        EngineOptions options;
        options.mode = modes.at(mode);
        options.budgets.max_attempts = max_attempts;
        options.recon_cache_dir = fs::temp_directory_path() / ("vulnval-record-recon-" + random_hex(4));

        fs::remove(cassette_path);
        // The stub ignores credentials, but the live transport insists on one.
        setenv("VULNVAL_API_KEY", "stub", 0);
        BackendConfig config;
        config.mode = BackendMode::record;
        config.endpoint_url = stub.endpoint_url();
        config.cassette_path = cassette_path;
        RecordingBackend recorder(config);
        auto recorded = run_once(recorder, *fixture, options);
        print("recorded", recorded);
        std::cout << "  cassette entries: " << recorder.cassette_size() << "\n";

        fixture->reset();
        ReplayBackend replayer(cassette_path);
        auto replayed = run_once(replayer, *fixture, options);
        print("replayed", replayed);
        fs::remove_all(*options.recon_cache_dir);
        stub.stop();
        fixture->stop();

        if (!(recorded.record.success == replayed.record.success && recorded.record.tca == replayed.record.tca &&
              recorded.record.attempts_used == replayed.record.attempts_used && !replayed.record.infra_failure)) {
            std::cerr << "replay diverged from the recording\n";
            return 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
