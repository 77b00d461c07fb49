#include "vulnval/evaluator.hpp"

#include "vulnval/util.hpp"

#include "json_io.hpp"

namespace vulnval {

CallbackListener::CallbackListener(std::optional<std::filesystem::path> log_path) : log_path_(std::move(log_path)) {
    server_.fallback([this](const ServerRequest& req, ServerResponse& res) {
        Received r{now_iso8601(), req.method, req.path + (req.query.empty() ? "" : "?" + req.query), req.headers,
                   req.body};
        {
            std::lock_guard lock(mu_);
            received_.push_back(r);
        }
        if (log_path_) {
            json headers = json::object();
            for (const auto& [k, v] : r.headers) {
                headers[k] = v;
            }
            append_line(*log_path_, json{{"timestamp", r.timestamp},
                                         {"method", r.method},
                                         {"path", r.path},
                                         {"headers", headers},
                                         {"body", r.body}}
                                        .dump());
        }
        res.body = "ok\n";
    });
}

CallbackListener::~CallbackListener() { stop(); }

int CallbackListener::start(const std::string& host, int port) {
    host_ = host;
    port_ = server_.start(host, port);
    return port_;
}

void CallbackListener::stop() { server_.stop(); }

std::vector<CallbackListener::Received> CallbackListener::received() const {
    std::lock_guard lock(mu_);
    return received_;
}

void CallbackListener::clear() {
    std::lock_guard lock(mu_);
    received_.clear();
}

} // namespace vulnval
