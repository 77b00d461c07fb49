#include "vulnval/harness.hpp"

#include "vulnval/errors.hpp"
#include "vulnval/util.hpp"

#include "json_io.hpp"

#include <atomic>
#include <mutex>
#include <set>
#include <thread>

namespace vulnval {

namespace fs = std::filesystem;

void run_reset_hook(const TargetManifest& manifest, std::chrono::milliseconds timeout) {
    if (!manifest.reset_hook) {
        return;
    }
    const auto& hook = *manifest.reset_hook;
    if (hook.rfind("http:", 0) == 0) {
        auto spec = trim(hook.substr(5));
        auto space = spec.find(' ');
        if (space == std::string::npos) {
            throw HarnessError("reset hook '" + hook + "' should read http:<METHOD> <path>");
        }
        HttpRequestSpec req;
        req.method = spec.substr(0, space);
        req.url = manifest.base_url + trim(spec.substr(space + 1));
        req.timeout = timeout;
        HttpResponse resp;
        try {
            resp = http_send(req);
        } catch (const NetworkError& e) {
            throw HarnessError("reset hook " + hook + ": " + e.what());
        }
        if (resp.status < 200 || resp.status >= 300) {
            throw HarnessError("reset hook " + hook + " answered HTTP " + std::to_string(resp.status));
        }
        return;
    }
    if (hook.rfind("cmd:", 0) == 0) {
        auto cwd = manifest.source_root.value_or(fs::temp_directory_path());
        auto r = run_shell(hook.substr(4), cwd, timeout);
        if (r.exit_code != 0) {
            throw HarnessError("reset hook exited with status " + std::to_string(r.exit_code) + ": " +
                               truncate_middle(r.stderr_text, 300));
        }
        return;
    }
    throw HarnessError("reset hook '" + hook + "' must start with http: or cmd:");
}

void persist_run(const fs::path& run_dir, const RunResult& result) {
    fs::create_directories(run_dir / "traces");
    for (const auto& trace : result.traces) {
        write_trace(trace, run_dir / "traces" / (trace.run_id + ".ndjson"));
    }
    write_file_atomic(run_dir / "context.json", serialize_context(result.final_state.context));
    if (result.poc) {
        write_file_atomic(run_dir / "poc.md", render_poc_markdown(*result.poc));
        write_file_atomic(run_dir / "poc.json", poc_to_json(*result.poc));
    }
    json summary{{"record", result.record}, {"verdicts", result.verdicts}, {"warnings", result.warnings}};
    summary["poc_error"] = result.poc_error ? json(*result.poc_error) : json(nullptr);
    summary["winning_plan"] = result.winning_plan ? json(*result.winning_plan) : json(nullptr);
    json seeds = json::object();
    for (const auto& [k, v] : result.seeds) {
        seeds[k] = v;
    }
    summary["seeds"] = seeds;
    write_file_atomic(run_dir / "summary.json", summary.dump(2) + "\n");
}

std::string callback_url_for(const TargetManifest& manifest, const CallbackListener& listener) {
    auto it = manifest.oracle.params.find("listener_token");
    auto token = it != manifest.oracle.params.end() ? it->second : manifest.target_id;
    return listener.url() + "/callback/" + token;
}

namespace {

RunRecord infra_record(const TargetManifest& m, const BenchmarkOptions& o, int run_index, std::string reason) {
    RunRecord r;
    r.target_id = m.target_id;
    r.run_index = run_index;
    r.mode = o.engine.mode;
    r.max_attempts = o.engine.budgets.max_attempts;
    r.infra_failure = true;
    r.failure_reason = std::move(reason);
    return r;
}

} // namespace

BenchmarkResult run_benchmark(std::span<const TargetManifest> manifests, const BenchmarkOptions& options,
                              const BackendFactory& backends, const EnvFactory& env_factory, const Evaluator& evaluator) {
    if (options.runs_per_target < 1) {
        throw std::invalid_argument("runs_per_target must be at least 1");
    }
    if (options.parallel < 1) {
        throw std::invalid_argument("parallel must be at least 1");
    }
    if (options.out_dir.empty()) {
        throw std::invalid_argument("benchmark needs an output directory");
    }
    options.engine.budgets.validate();
    std::set<std::string> ids;
    for (const auto& m : manifests) {
        if (!ids.insert(m.target_id).second) {
            throw std::invalid_argument("duplicate target id " + m.target_id);
        }
    }

    BenchmarkResult out;
    out.records_path = options.records_path.value_or(options.out_dir / "records.ndjson");
    fs::create_directories(options.out_dir);
    if (out.records_path.has_parent_path()) {
        fs::create_directories(out.records_path.parent_path());
    }
    const auto knowledge_dir = options.knowledge_dir.value_or(options.out_dir / "knowledge");

    std::vector<std::vector<RunRecord>> per_target(manifests.size());
    std::mutex sink;
    auto emit = [&](std::size_t t, RunRecord record, const RunResult* result) {
        std::lock_guard lock(sink);
        append_record(out.records_path, record);
        out.infra_failures += record.infra_failure ? 1 : 0;
        per_target[t].push_back(std::move(record));
        if (options.on_run && result) {
            options.on_run(*result);
        }
    };

    auto run_target = [&](std::size_t t) {
        const auto& m = manifests[t];
        std::optional<KnowledgeStore> store;
        if (options.engine.mode == EngineMode::greybox_single) {
            store.emplace(knowledge_file(knowledge_dir, m.target_id));
        }
        for (int k = 1; k <= options.runs_per_target; ++k) {
            try {
                run_reset_hook(m);
            } catch (const HarnessError& e) {
                emit(t, infra_record(m, options, k, std::string("reset failed: ") + e.what()), nullptr);
                continue;
            }
            auto engine = options.engine;
            engine.run_index = k;
            engine.run_id.reset();
            if (!engine.callback_url && evaluator.listener()) {
                engine.callback_url = callback_url_for(m, *evaluator.listener());
            }
            try {
                auto backend = backends(m, k);
                auto result = run_engine(m, engine, *backend, env_factory, evaluator, store ? &*store : nullptr);
                persist_run(options.out_dir / m.target_id / ("run-" + std::to_string(k)), result);
                emit(t, result.record, &result);
            } catch (const TargetUnreachableError& e) {
                emit(t, infra_record(m, options, k, std::string("launch failed: ") + e.what()), nullptr);
            } catch (const Error& e) {
                emit(t, infra_record(m, options, k, std::string("run aborted: ") + e.what()), nullptr);
            }
        }
    };

    // A shared callback listener is cleared at every run start, so concurrent runs would
    // erase each other's evidence.
    const int width = evaluator.listener() ? 1 : std::min<int>(options.parallel, static_cast<int>(manifests.size()));
    if (width <= 1) {
        for (std::size_t t = 0; t < manifests.size(); ++t) {
            run_target(t);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        std::mutex failure_mu;
        std::exception_ptr failure;
        for (int w = 0; w < width; ++w) {
            workers.emplace_back([&] {
                for (auto t = next++; t < manifests.size(); t = next++) {
                    try {
                        run_target(t);
                    } catch (...) {
                        std::lock_guard lock(failure_mu);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
        for (auto& w : workers) {
            w.join();
        }
        if (failure) {
            std::rethrow_exception(failure);
        }
    }
    for (auto& recs : per_target) {
        out.records.insert(out.records.end(), recs.begin(), recs.end());
    }
    return out;
}

} // namespace vulnval
