#include "vulnval/cli.hpp"

#include "vulnval/errors.hpp"
#include "vulnval/fixtures.hpp"
#include "vulnval/harness.hpp"
#include "vulnval/llm_stub.hpp"
#include "vulnval/metrics.hpp"
#include "vulnval/taxonomy.hpp"
#include "vulnval/util.hpp"

#include "CLI11.hpp"
#include "json_io.hpp"

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <pthread.h>

namespace vulnval {

namespace fs = std::filesystem;

namespace {

const std::map<std::string, EngineMode> kModes{{"greybox-multi", EngineMode::greybox_multi},
                                               {"greybox-single", EngineMode::greybox_single},
                                               {"blackbox", EngineMode::blackbox_multi}};

/// Input the user can fix (bad manifest, missing file, invalid labels): exit 2.
struct UsageError : Error {
    using Error::Error;
};

struct Output {
    std::string format = "text";
    bool json() const { return format == "json"; }
};

void add_output(CLI::App* app, Output& o) {
    app->add_option("--output", o.format, "Output format")->check(CLI::IsMember({"text", "json"}));
}

struct BackendFlags {
    std::string backend = "replay";
    std::string cassette;
    std::string endpoint;
    std::string model = "default";
};

void add_backend(CLI::App* app, BackendFlags& b) {
    app->add_option("--backend", b.backend, "Model backend")->check(CLI::IsMember({"live", "record", "replay"}));
    app->add_option("--cassette", b.cassette, "Cassette file for record/replay");
    app->add_option("--endpoint", b.endpoint, "Chat-completions URL for live/record (default $VULNVAL_ENDPOINT)");
    app->add_option("--model", b.model, "Model name sent to the endpoint");
}

BackendConfig backend_config(const BackendFlags& b) {
    BackendConfig c;
    c.mode = parse_backend_mode(b.backend);
    c.model_name = b.model;
    if (!b.cassette.empty()) {
        c.cassette_path = b.cassette;
    }
    if (!b.endpoint.empty()) {
        c.endpoint_url = b.endpoint;
    } else if (const char* env = std::getenv("VULNVAL_ENDPOINT")) {
        c.endpoint_url = env;
    }
    if (c.mode == BackendMode::replay && c.cassette_path && !fs::exists(*c.cassette_path)) {
        throw UsageError("cassette " + c.cassette_path->string() + " does not exist");
    }
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    return c;
}

struct EngineFlags {
    std::string mode = "greybox-multi";
    int max_attempts = 5;
    std::string listener;
    std::string wordlist;
    std::string out_dir = "vulnval-runs";
    std::string records;
    std::string knowledge_dir;
    bool no_recon = false;
    bool no_poc = false;
    bool no_reset = false;
};

void add_engine(CLI::App* app, EngineFlags& f) {
    app->add_option("--mode", f.mode, "Engine mode")->check(CLI::IsMember({"greybox-multi", "greybox-single", "blackbox"}));
    app->add_option("--max-attempts", f.max_attempts, "Strategy-execution loops per run")->check(CLI::PositiveNumber);
    app->add_option("--listener", f.listener, "Callback listener bind address HOST:PORT");
    app->add_option("--wordlist", f.wordlist, "Recon wordlist file");
    app->add_option("--out", f.out_dir, "Directory for per-run artifacts");
    app->add_option("--records", f.records, "Append run records to this NDJSON file");
    app->add_option("--knowledge-dir", f.knowledge_dir, "Knowledge stores for greybox-single");
    app->add_flag("--no-recon", f.no_recon, "Skip endpoint discovery");
    app->add_flag("--no-poc", f.no_poc, "Skip PoC generation");
}

void add_no_reset(CLI::App* app, bool& flag) {
    app->add_flag("--no-reset", flag, "Do not run the manifest's reset hook first");
}

EngineOptions engine_options(const EngineFlags& f) {
    EngineOptions o;
    o.mode = kModes.at(f.mode);
    o.budgets.max_attempts = f.max_attempts;
    o.recon = !f.no_recon;
    o.generate_poc = !f.no_poc;
    if (!f.wordlist.empty()) {
        o.wordlist = load_wordlist(f.wordlist);
    }
    return o;
}

/// Starts a listener when asked for or when some oracle needs one.
std::unique_ptr<CallbackListener> maybe_listener(const std::string& bind, bool needed) {
    if (bind.empty() && !needed) {
        return nullptr;
    }
    Authority a{"127.0.0.1", 0};
    if (!bind.empty()) {
        try {
            a = Authority::parse(bind);
        } catch (const std::invalid_argument& e) {
            throw UsageError(std::string("--listener: ") + e.what());
        }
    }
    auto l = std::make_unique<CallbackListener>();
    l->start(a.host, a.port);
    return l;
}

std::optional<Authority> authority_of(const CallbackListener* l) {
    return l ? std::optional<Authority>(l->authority()) : std::nullopt;
}

TargetManifest load_manifest(const std::string& path) {
    try {
        return load_target_manifest(path);
    } catch (const ManifestError& e) {
        throw UsageError(path + ": " + e.what());
    }
}

int exit_for(const RunRecord& r) {
    if (r.infra_failure) return kExitInfra;
    return r.success ? kExitSuccess : kExitNotConfirmed;
}

json record_json(const RunRecord& r) { return json(r); }

// ---------------------------------------------------------------------------

int cmd_run(const EngineFlags& ef, const BackendFlags& bf, const std::string& manifest_path, int run_index,
            const Output& o, std::ostream& out) {
    auto manifest = load_manifest(manifest_path);
    auto options = engine_options(ef);
    options.run_index = run_index;
    auto backend = make_backend(backend_config(bf));
    auto listener = maybe_listener(ef.listener, manifest.oracle.kind == AttackType::outbound_service);
    if (listener) {
        options.callback_url = callback_url_for(manifest, *listener);
    }
    if (!ef.no_reset) {
        run_reset_hook(manifest);
    }
    Evaluator evaluator(listener.get());
    std::optional<KnowledgeStore> store;
    if (options.mode == EngineMode::greybox_single) {
        auto dir = ef.knowledge_dir.empty() ? fs::path(ef.out_dir) / "knowledge" : fs::path(ef.knowledge_dir);
        store.emplace(knowledge_file(dir, manifest.target_id));
    }

    RunResult result;
    try {
        result = run_engine(manifest, options, *backend, default_env_factory(authority_of(listener.get())), evaluator,
                            store ? &*store : nullptr);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const auto run_dir = fs::path(ef.out_dir) / manifest.target_id / ("run-" + std::to_string(run_index));
    persist_run(run_dir, result);
    if (!ef.records.empty()) {
        append_record(ef.records, result.record);
    }
    const auto poc_path = result.poc ? std::optional<fs::path>(run_dir / "poc.md") : std::nullopt;
    const auto& r = result.record;

    if (o.json()) {
        json j{{"record", record_json(r)}, {"run_dir", run_dir.string()}};
        j["poc"] = poc_path ? json(poc_path->string()) : json(nullptr);
        j["poc_error"] = result.poc_error ? json(*result.poc_error) : json(nullptr);
        j["warnings"] = result.warnings;
        out << j.dump() << "\n";
    } else {
        for (const auto& s : r.loop_summaries) {
            out << s << "\n";
        }
        if (r.success) {
            out << "verdict: exploit confirmed for " << r.target_id << " (tca " << *r.tca << " of " << r.max_attempts
                << ")\n";
        } else {
            out << "verdict: " << (r.infra_failure ? "infrastructure failure" : "exploit not confirmed") << " for "
                << r.target_id << ": " << r.failure_reason.value_or("unknown") << "\n";
        }
        if (poc_path) {
            out << "poc: " << poc_path->string() << "\n";
        } else if (result.poc_error) {
            out << "poc: not generated (" << *result.poc_error << ")\n";
        }
        out << "artifacts: " << run_dir.string() << "\n";
    }
    return exit_for(r);
}

int cmd_bench(const EngineFlags& ef, const BackendFlags& bf, const std::vector<std::string>& manifest_paths, int runs,
              int parallel, const Output& o, std::ostream& out) {
    std::vector<TargetManifest> manifests;
    bool needs_listener = false;
    for (const auto& p : manifest_paths) {
        manifests.push_back(load_manifest(p));
        needs_listener = needs_listener || manifests.back().oracle.kind == AttackType::outbound_service;
    }
    const auto config = backend_config(bf);
    auto listener = maybe_listener(ef.listener, needs_listener);
    Evaluator evaluator(listener.get());

    BenchmarkOptions options;
    options.runs_per_target = runs;
    options.engine = engine_options(ef);
    options.out_dir = ef.out_dir;
    if (!ef.records.empty()) options.records_path = ef.records;
    if (!ef.knowledge_dir.empty()) options.knowledge_dir = ef.knowledge_dir;
    options.parallel = parallel;
    if (!o.json()) {
        options.on_run = [&out](const RunResult& r) {
            out << r.record.target_id << " run " << r.record.run_index << ": "
                << (r.record.success ? "confirmed (tca " + std::to_string(*r.record.tca) + ")"
                                     : r.record.failure_reason.value_or("not confirmed"))
                << "\n";
        };
    }
    BenchmarkResult result;
    try {
        result = run_benchmark(manifests, options, [&](const TargetManifest&, int) { return make_backend(config); },
                               default_env_factory(authority_of(listener.get())), evaluator);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    std::set<std::string> exploited;
    for (const auto& r : result.records) {
        if (r.success) exploited.insert(r.target_id);
    }
    if (o.json()) {
        json recs = json::array();
        for (const auto& r : result.records) recs.push_back(record_json(r));
        out << json{{"records_path", result.records_path.string()},
                    {"records", recs},
                    {"infra_failures", result.infra_failures},
                    {"targets_exploited", exploited.size()}}
                   .dump()
            << "\n";
    } else {
        out << "records: " << result.records_path.string() << " (" << result.records.size() << " runs, "
            << result.infra_failures << " infrastructure failures)\n";
        out << "targets exploited: " << exploited.size() << " of " << manifests.size() << "\n";
    }
    if (result.infra_failures == static_cast<int>(result.records.size())) {
        return kExitInfra;
    }
    return exploited.empty() ? kExitNotConfirmed : kExitSuccess;
}

int cmd_metrics(const std::string& records_path, int max_attempts, bool exclude_infra, const Output& o,
                std::ostream& out) {
    std::vector<RunRecord> records;
    try {
        records = read_records(records_path);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    MetricsOptions mo;
    mo.exclude_infra_failures = exclude_infra;
    MetricsReport report;
    try {
        report = summarize_records(records, max_attempts, mo);
    } catch (const MetricsError& e) {
        throw UsageError(e.what());
    }
    if (o.json()) {
        out << metrics_to_json(report) << "\n";
    } else {
        out << format_metrics_table(report);
        out << "targets    " << report.n_targets << " (" << report.n_exploited << " exploited";
        if (report.n_excluded > 0) out << ", " << report.n_excluded << " excluded";
        out << ")\n";
    }
    return kExitSuccess;
}

/// Looks for <dir of poc>/traces/<source_trace>.ndjson when no trace is given.
std::optional<ExecutionTrace> find_trace(const fs::path& poc_path, const PoCReport& report, const std::string& explicit_path) {
    if (!explicit_path.empty()) {
        return read_trace(explicit_path);
    }
    auto candidate = poc_path.parent_path() / "traces" / (report.source_trace + ".ndjson");
    if (!report.source_trace.empty() && fs::exists(candidate)) {
        return read_trace(candidate);
    }
    return std::nullopt;
}

PoCReport load_poc(const std::string& path) {
    try {
        return parse_poc_json(read_file(path));
    } catch (const Error& e) {
        throw UsageError(path + ": " + e.what());
    }
}

int cmd_poc_validate(const std::string& poc_path, const std::string& trace_path, const Output& o, std::ostream& out) {
    auto report = load_poc(poc_path);
    auto trace = find_trace(poc_path, report, trace_path);
    auto check = validate_poc(report, trace ? &*trace : nullptr);
    std::optional<std::size_t> bad;
    if (trace) bad = first_inconsistent_step(report, *trace);
    if (o.json()) {
        json j{{"has_oracle", check.has_oracle},
               {"has_steps", check.has_steps},
               {"trace_consistent", check.trace_consistent},
               {"trace", trace ? json(trace->run_id) : json(nullptr)}};
        j["first_inconsistent_step"] = bad ? json(*bad + 1) : json(nullptr);
        out << j.dump() << "\n";
    } else {
        out << "has_oracle        " << (check.has_oracle ? "yes" : "no") << "\n";
        out << "has_steps         " << (check.has_steps ? "yes" : "no") << "\n";
        out << "trace_consistent  " << (check.trace_consistent ? "yes" : "no");
        if (!trace) out << " (source trace " << report.source_trace << " not found)";
        if (bad) out << " (step " << *bad + 1 << " has no counterpart)";
        out << "\n";
    }
    return check.all() ? kExitSuccess : kExitNotConfirmed;
}

int cmd_poc_replay(const std::string& poc_path, const std::string& manifest_path, const std::string& listener_bind,
                   bool no_reset, const Output& o, std::ostream& out) {
    auto report = load_poc(poc_path);
    auto manifest = load_manifest(manifest_path);
    auto listener = maybe_listener(listener_bind, manifest.oracle.kind == AttackType::outbound_service);
    if (!no_reset) {
        run_reset_hook(manifest);
    }
    Variables seeds{{"TARGET", manifest.base_url}};
    if (listener) {
        seeds["CALLBACK_URL"] = callback_url_for(manifest, *listener);
    }
    Evaluator evaluator(listener.get());
    evaluator.begin_run();
    auto env = create_env(manifest, authority_of(listener.get()));
    auto outcome = replay_poc_detailed(report, *env, manifest.oracle, evaluator.sources(manifest.base_url, nullptr), seeds);
    env->destroy();

    const bool infra = outcome.verdict.status == VerdictStatus::withheld;
    if (o.json()) {
        json j{{"success", outcome.success}, {"diagnostics", outcome.diagnostics}, {"verdict", outcome.verdict}};
        j["failed_step"] = outcome.failed_step ? json(*outcome.failed_step) : json(nullptr);
        out << j.dump() << "\n";
    } else {
        out << "replay: " << (outcome.success ? "exploit reproduced" : "exploit not reproduced") << "\n";
        if (outcome.failed_step) out << outcome.diagnostics << "\n";
        out << "oracle: " << to_string(outcome.verdict.status) << ": " << outcome.verdict.evidence << "\n";
    }
    if (infra) return kExitInfra;
    return outcome.success ? kExitSuccess : kExitNotConfirmed;
}

/// Blocks until SIGINT or SIGTERM. The signals are masked before any server thread starts.
sigset_t block_termination() {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
    return set;
}

void wait_for(const sigset_t& set) {
    int sig = 0;
    sigwait(&set, &sig);
}

int cmd_fixture_start(const FixtureOptions& fo, const Output& o, std::ostream& out) {
    auto mask = block_termination();
    auto fixture = start_fixture(fo);
    if (o.json()) {
        out << json{{"name", std::string(to_string(fixture->name()))},
                    {"base_url", fixture->base_url()},
                    {"manifest", fixture->manifest_path().string()},
                    {"workspace", fixture->workspace().string()}}
                   .dump()
            << std::endl;
    } else {
        out << "fixture " << to_string(fixture->name()) << " serving at " << fixture->base_url() << "\n"
            << "manifest: " << fixture->manifest_path().string() << std::endl;
    }
    wait_for(mask);
    fixture->stop();
    return kExitSuccess;
}

int cmd_llm_stub(const std::string& script_path, const std::string& host, int port, const Output& o, std::ostream& out) {
    Script script;
    try {
        script = load_script(script_path);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    auto mask = block_termination();
    LlmStubServer server(std::move(script));
    server.start(host, port);
    if (o.json()) {
        out << json{{"endpoint", server.endpoint_url()}}.dump() << std::endl;
    } else {
        out << "llm stub serving at " << server.endpoint_url() << std::endl;
    }
    wait_for(mask);
    server.stop();
    return kExitSuccess;
}

int cmd_fixture_reset(const std::string& manifest_path, const Output& o, std::ostream& out) {
    auto manifest = load_manifest(manifest_path);
    run_reset_hook(manifest);
    if (o.json()) {
        out << json{{"reset", true}, {"target_id", manifest.target_id}}.dump() << "\n";
    } else {
        out << "reset " << manifest.target_id << "\n";
    }
    return kExitSuccess;
}

int cmd_annotate_add(const std::string& records_path, const std::string& annotations_path, FailureAnnotation a,
                     const Output& o, std::ostream& out) {
    std::vector<RunRecord> records;
    try {
        records = read_records(records_path);
        annotate_failure(records, a, annotations_path);
    } catch (const TaxonomyError& e) {
        throw UsageError(e.what());
    } catch (const HarnessError& e) {
        throw UsageError(e.what());
    }
    if (o.json()) {
        out << serialize_annotation(a) << "\n";
    } else {
        out << "annotated " << a.target_id << " run " << a.run_index << " (" << a.failure_agent << ")\n";
    }
    return kExitSuccess;
}

int cmd_annotate_report(const std::string& annotations_path, const Output& o, std::ostream& out) {
    std::vector<FailureAnnotation> annotations;
    try {
        if (fs::exists(annotations_path)) annotations = read_annotations(annotations_path);
    } catch (const TaxonomyError& e) {
        throw UsageError(e.what());
    }
    auto d = failure_distribution(annotations);
    out << (o.json() ? distribution_to_json(d) + "\n" : format_distribution(d));
    return kExitSuccess;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Agentic exploit validation: plan, explore, execute and confirm vulnerability reports", "vulnval"};
    app.set_version_flag("--version", "vulnval 0.1.0");
    app.require_subcommand(1);

    Output o;
    EngineFlags ef;
    BackendFlags bf;
    std::string manifest;
    std::vector<std::string> manifests;
    int run_index = 1;
    int runs = 1;
    int parallel = 1;

    auto* run = app.add_subcommand("run", "Run the exploitation engine against one target");
    run->add_option("--manifest", manifest, "Target manifest")->required();
    run->add_option("--run-index", run_index, "Run index recorded in the run record")->check(CLI::PositiveNumber);
    add_engine(run, ef);
    add_no_reset(run, ef.no_reset);
    add_backend(run, bf);
    add_output(run, o);

    auto* bench = app.add_subcommand("bench", "Run every manifest several times and write run records");
    bench->add_option("--manifest", manifests, "Target manifest (repeatable)")->required();
    bench->add_option("--runs", runs, "Independent runs per target")->check(CLI::PositiveNumber);
    bench->add_option("--parallel", parallel, "Targets run concurrently")->check(CLI::PositiveNumber);
    add_engine(bench, ef);
    add_backend(bench, bf);
    add_output(bench, o);

    std::string records;
    int max_attempts = 5;
    bool exclude_infra = false;
    auto* metrics = app.add_subcommand("metrics", "Compute SR, Success@k, AvgTCA and SE from run records");
    metrics->add_option("--records", records, "Run records NDJSON")->required();
    metrics->add_option("--max-attempts", max_attempts, "Attempt budget the records were produced with")
        ->check(CLI::PositiveNumber);
    metrics->add_flag("--exclude-infra", exclude_infra, "Drop infrastructure failures from denominators");
    add_output(metrics, o);

    std::string poc;
    std::string trace;
    auto* poc_validate = app.add_subcommand("poc-validate", "Check a PoC report's structure and trace consistency");
    poc_validate->add_option("--poc", poc, "poc.json")->required();
    poc_validate->add_option("--trace", trace, "Source trace NDJSON (default: traces/<source trace>.ndjson next to the PoC)");
    add_output(poc_validate, o);

    std::string listener;
    bool no_reset = false;
    auto* poc_replay = app.add_subcommand("poc-replay", "Replay a PoC report against a target and run its oracle");
    poc_replay->add_option("--poc", poc, "poc.json")->required();
    poc_replay->add_option("--manifest", manifest, "Target manifest")->required();
    poc_replay->add_option("--listener", listener, "Callback listener bind address HOST:PORT");
    add_no_reset(poc_replay, no_reset);
    add_output(poc_replay, o);

    auto* fixture = app.add_subcommand("fixture", "Seeded vulnerable targets and the scripted model server");
    fixture->require_subcommand(1);
    FixtureOptions fo;
    std::string fixture_name = "regrole";
    std::string workspace;
    auto* f_start = fixture->add_subcommand("start", "Serve a fixture until interrupted");
    f_start->add_option("--name", fixture_name, "Fixture")->check(CLI::IsMember({"regrole", "toolexec", "fileserve"}));
    f_start->add_option("--host", fo.host, "Bind address");
    f_start->add_option("--port", fo.port, "Port (0 picks a free one)");
    f_start->add_option("--seed", fo.seed, "Seed for secrets and tokens");
    f_start->add_option("--variant", fo.variant, "fileserve oracle variant")
        ->check(CLI::IsMember({"file_access", "outbound_service"}));
    f_start->add_option("--workspace", workspace, "Directory for the source tree and manifest.json");
    add_output(f_start, o);
    auto* f_reset = fixture->add_subcommand("reset", "Run a manifest's reset hook");
    f_reset->add_option("--manifest", manifest, "Target manifest")->required();
    add_output(f_reset, o);
    std::string script;
    std::string stub_host = "127.0.0.1";
    int stub_port = 0;
    auto* f_stub = fixture->add_subcommand("llm-stub", "Serve scripted chat completions for recording cassettes");
    f_stub->add_option("--script", script, "Reply script")->required();
    f_stub->add_option("--host", stub_host, "Bind address");
    f_stub->add_option("--port", stub_port, "Port (0 picks a free one)");
    add_output(f_stub, o);

    auto* annotate = app.add_subcommand("annotate", "Record failure causes and report their distribution");
    annotate->require_subcommand(1);
    std::string annotations;
    FailureAnnotation a;
    auto* a_add = annotate->add_subcommand("add", "Annotate one failed run");
    a_add->add_option("--records", records, "Run records NDJSON")->required();
    a_add->add_option("--annotations", annotations, "Annotations NDJSON (appended)")->required();
    a_add->add_option("--target", a.target_id, "Target id")->required();
    a_add->add_option("--run", a.run_index, "Run index")->required();
    a_add->add_option("--agent", a.failure_agent, "Failure-inducing agent")->required();
    a_add->add_option("--primary", a.primary_causes, "Primary cause (repeatable)")->required();
    a_add->add_option("--secondary", a.secondary_causes, "Secondary cause (repeatable)");
    a_add->add_option("--notes", a.notes, "Free text");
    add_output(a_add, o);
    auto* a_report = annotate->add_subcommand("report", "Per-agent and per-cause failure distribution");
    a_report->add_option("--annotations", annotations, "Annotations NDJSON")->required();
    add_output(a_report, o);

    std::vector<const char*> argv{"vulnval"};
    for (const auto& s : args) argv.push_back(s.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitSuccess;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitSuccess;
    } catch (const CLI::CallForVersion&) {
        out << app.version() << "\n";
        return kExitSuccess;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n";
        const CLI::App* failing = &app;
        while (!failing->get_subcommands().empty()) failing = failing->get_subcommands().front();
        err << failing->help();
        return kExitUsage;
    }

    try {
        if (run->parsed()) return cmd_run(ef, bf, manifest, run_index, o, out);
        if (bench->parsed()) return cmd_bench(ef, bf, manifests, runs, parallel, o, out);
        if (metrics->parsed()) return cmd_metrics(records, max_attempts, exclude_infra, o, out);
        if (poc_validate->parsed()) return cmd_poc_validate(poc, trace, o, out);
        if (poc_replay->parsed()) return cmd_poc_replay(poc, manifest, listener, no_reset, o, out);
        if (f_start->parsed()) {
            fo.name = parse_fixture_name(fixture_name);
            if (!workspace.empty()) fo.workspace = workspace;
            return cmd_fixture_start(fo, o, out);
        }
        if (f_reset->parsed()) return cmd_fixture_reset(manifest, o, out);
        if (f_stub->parsed()) return cmd_llm_stub(script, stub_host, stub_port, o, out);
        if (a_add->parsed()) return cmd_annotate_add(records, annotations, a, o, out);
        if (a_report->parsed()) return cmd_annotate_report(annotations, o, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitInfra;
    }
    err << app.help();
    return kExitUsage;
}

} // namespace vulnval
