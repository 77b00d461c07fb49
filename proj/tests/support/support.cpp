#include "support.hpp"

#include "vulnval/errors.hpp"
#include "vulnval/harness.hpp"
#include "vulnval/util.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <stdexcept>

namespace vvtest {

using namespace vulnval;

TempDir::TempDir() : path_(fs::temp_directory_path() / ("vulnval-test-" + random_hex(6))) {
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

fs::path data_file(const std::string& name) { return fs::path(VULNVAL_TEST_DATA_DIR) / name; }
fs::path cassette(const std::string& name) { return fs::path(VULNVAL_SHIPPED_ASSETS) / "cassettes" / (name + ".ndjson"); }
fs::path script(const std::string& name) { return fs::path(VULNVAL_SHIPPED_ASSETS) / "scripts" / (name + ".txt"); }

RunRecord record(const std::string& target, int run, std::optional<int> tca, int max_attempts) {
    RunRecord r;
    r.target_id = target;
    r.run_index = run;
    r.success = tca.has_value();
    r.tca = tca;
    r.max_attempts = max_attempts;
    r.attempts_used = tca.value_or(max_attempts);
    return r;
}

ConnectionCounter::ConnectionCounter() {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) {
        throw std::runtime_error("socket() failed");
    }
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd_, 16) != 0) {
        ::close(fd_);
        throw std::runtime_error("cannot bind the forbidden-port listener");
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    thread_ = std::thread([this] {
        while (!stop_) {
            pollfd p{fd_, POLLIN, 0};
            if (::poll(&p, 1, 50) > 0 && (p.revents & POLLIN)) {
                int c = ::accept(fd_, nullptr, nullptr);
                if (c >= 0) {
                    ++accepted_;
                    ::close(c);
                }
            }
        }
    });
}

ConnectionCounter::~ConnectionCounter() {
    stop_ = true;
    if (thread_.joinable()) {
        thread_.join();
    }
    ::close(fd_);
}

ConnectionCounter& forbidden_listener() {
    static ConnectionCounter counter;
    return counter;
}

std::unique_ptr<FixtureTarget> start(FixtureName name, const std::string& variant) {
    FixtureOptions o;
    o.name = name;
    o.variant = variant;
    return start_fixture(o);
}

InstrumentedRun run_instrumented(FixtureTarget& fixture, LlmBackend& backend, const RunSettings& settings) {
    InstrumentedRun out;
    TempDir scratch;
    const auto& manifest = fixture.manifest();

    std::unique_ptr<CallbackListener> listener;
    EngineOptions options;
    options.mode = settings.mode;
    options.budgets.max_attempts = settings.max_attempts;
    options.recon_cache_dir = scratch / "recon";
    options.source_observer = [&](std::string_view, const std::string&) { ++out.source_reads; };
    if (settings.listener) {
        listener = std::make_unique<CallbackListener>();
        listener->start();
        options.callback_url = callback_url_for(manifest, *listener);
    }
    std::optional<Authority> authority;
    if (listener) authority = listener->authority();
    auto base = default_env_factory(authority);
    EnvFactory counting = [&](const TargetManifest& m) {
        auto env = base(m);
        env->set_observer([&](std::string_view, std::string_view) { ++out.env_interactions; });
        return env;
    };
    backend.set_observer([&](AgentRole role, int, const Conversation& c, const Message& reply) {
        ++out.turns[role];
        for (const auto& m : c.messages) out.transcript.push_back(m.content);
        out.transcript.push_back(reply.content);
    });

    Evaluator evaluator(listener.get());
    std::optional<KnowledgeStore> store;
    if (settings.mode == EngineMode::greybox_single) {
        store.emplace(knowledge_file(scratch / "knowledge", manifest.target_id));
    }
    out.result = run_engine(manifest, options, backend, counting, evaluator, store ? &*store : nullptr);
    backend.set_observer({});
    return out;
}

InstrumentedRun run_cassette(FixtureTarget& fixture, const std::string& cassette_name, const RunSettings& settings) {
    ReplayBackend backend(cassette(cassette_name));
    return run_instrumented(fixture, backend, settings);
}

std::size_t trace_interactions(const RunResult& result) {
    std::size_t n = 0;
    for (const auto& t : result.traces) n += t.interaction_count();
    return n;
}

std::vector<std::string> leaked_secrets(const TargetManifest& manifest, const RunResult& result) {
    std::vector<std::string> found;
    auto scan = [&](const std::string& text, bool only_secret_names) {
        for (const auto& [name, value] : manifest.oracle.params) {
            const bool secret_name = name.find("secret") != std::string::npos || name.find("token") != std::string::npos;
            if (value.size() < 3 || (only_secret_names && !secret_name)) continue;
            if (text.find(value) != std::string::npos) found.push_back(name + " in: " + truncate_middle(text, 200));
        }
    };
    for (const auto& v : result.verdicts) {
        if (v.status == VerdictStatus::failure) scan(feedback_text(v, manifest.oracle), false);
    }
    for (const auto* e : result.final_state.context.of_kind(ContextKind::evaluator_feedback)) scan(e->body, false);
    for (const auto& s : result.record.loop_summaries) scan(s, true);
    return found;
}

} // namespace vvtest
