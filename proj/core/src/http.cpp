// The only translation unit that includes httplib.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "vulnval/http.hpp"

#include "vulnval/errors.hpp"
#include "vulnval/util.hpp"

#include <sys/socket.h>

#include <mutex>
#include <regex>
#include <thread>

namespace vulnval {

std::optional<std::string> find_header(const HeaderList& headers, std::string_view name) {
    for (const auto& [k, v] : headers) {
        if (k.size() == name.size() && to_lower(k) == to_lower(name)) {
            return v;
        }
    }
    return std::nullopt;
}

std::vector<std::string> find_headers(const HeaderList& headers, std::string_view name) {
    std::vector<std::string> out;
    for (const auto& [k, v] : headers) {
        if (k.size() == name.size() && to_lower(k) == to_lower(name)) {
            out.push_back(v);
        }
    }
    return out;
}

namespace {

httplib::Request to_httplib(const HttpRequestSpec& spec, std::string path) {
    httplib::Request req;
    req.method = spec.method;
    req.path = std::move(path);
    for (const auto& [k, v] : spec.headers) {
        req.headers.emplace(k, v);
    }
    req.body = spec.body;
    return req;
}

HttpResponse send_with(httplib::ClientImpl& cli, const HttpRequestSpec& spec, const std::string& path,
                       const std::string& where) {
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(spec.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(spec.timeout - secs);
    cli.set_connection_timeout(secs.count(), usecs.count());
    cli.set_read_timeout(secs.count(), usecs.count());
    cli.set_write_timeout(secs.count(), usecs.count());
    cli.set_follow_location(false);
    cli.set_keep_alive(false);

    auto started = std::chrono::steady_clock::now();
    auto result = cli.send(to_httplib(spec, path));
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
    if (!result) {
        throw NetworkError(spec.method + " " + where + ": " + httplib::to_string(result.error()));
    }
    HttpResponse out;
    out.status = result->status;
    for (const auto& [k, v] : result->headers) {
        out.headers.emplace_back(k, v);
    }
    out.body = result->body;
    out.elapsed = elapsed;
    return out;
}

} // namespace

HttpResponse http_send(const HttpRequestSpec& spec) {
    Url url;
    try {
        url = Url::parse(spec.url);
    } catch (const std::invalid_argument& e) {
        throw NetworkError(e.what());
    }
    if (url.scheme == "https") {
        httplib::SSLClient cli(url.host, url.port);
        return send_with(cli, spec, url.path, spec.url);
    }
    httplib::ClientImpl cli(url.host, url.port);
    return send_with(cli, spec, url.path, spec.url);
}

HttpResponse http_send_unix(const std::string& socket_path, const HttpRequestSpec& spec) {
    httplib::ClientImpl cli(socket_path, 80);
    cli.set_address_family(AF_UNIX);
    auto path = spec.url.empty() ? std::string("/") : spec.url;
    return send_with(cli, spec, path, "unix:" + socket_path + path);
}

std::optional<std::string> ServerRequest::param(const std::string& name) const {
    auto it = params.find(name);
    if (it == params.end()) {
        return std::nullopt;
    }
    return it->second;
}

bool ServerRequest::from_loopback() const {
    return remote_addr == "127.0.0.1" || remote_addr == "::1" || remote_addr.rfind("127.", 0) == 0 ||
           remote_addr.empty(); // unix socket peers carry no address
}

struct HttpServer::Impl {
    struct Route {
        std::string method;
        std::regex pattern;
        Handler handler;
    };

    httplib::Server server;
    std::vector<Route> routes;
    Handler fallback;
    std::thread thread;
    std::mutex mu;
    int port = 0;

    void dispatch(const httplib::Request& req, httplib::Response& res) {
        ServerRequest in;
        in.method = req.method;
        in.path = req.path;
        if (auto q = req.target.find('?'); q != std::string::npos) {
            in.query = req.target.substr(q + 1);
        }
        for (const auto& [k, v] : req.headers) {
            in.headers.emplace_back(k, v);
        }
        in.body = req.body;
        in.remote_addr = req.remote_addr;
        for (const auto& [k, v] : req.params) {
            in.params.emplace(k, v);
        }

        ServerResponse out;
        const Handler* handler = nullptr;
        {
            std::lock_guard lock(mu);
            for (const auto& r : routes) {
                if ((r.method == in.method || (r.method == "GET" && in.method == "HEAD")) &&
                    std::regex_match(in.path, r.pattern)) {
                    handler = &r.handler;
                    break;
                }
            }
        }
        try {
            if (handler) {
                (*handler)(in, out);
            } else if (fallback) {
                fallback(in, out);
            } else {
                out.status = 404;
                out.body = "not found\n";
            }
        } catch (const std::exception& e) {
            out = ServerResponse{};
            out.status = 500;
            out.body = std::string("internal error: ") + e.what() + "\n";
        }
        res.status = out.status;
        for (const auto& [k, v] : out.headers) {
            res.set_header(k, v);
        }
        res.set_content(out.body, out.content_type);
    }

    void install() {
        // httplib defaults to SO_REUSEPORT, which lets a second server share a busy port.
        server.set_socket_options([](socket_t sock) {
            int yes = 1;
            setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
        });
        auto h = [this](const httplib::Request& req, httplib::Response& res) { dispatch(req, res); };
        server.Get(".*", h);
        server.Post(".*", h);
        server.Put(".*", h);
        server.Patch(".*", h);
        server.Delete(".*", h);
        server.Options(".*", h);
        server.new_task_queue = [] { return new httplib::ThreadPool(4); };
        server.set_keep_alive_max_count(1);
    }

    void run_thread() {
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
};

HttpServer::HttpServer() : impl_(std::make_unique<Impl>()) { impl_->install(); }

HttpServer::~HttpServer() { stop(); }

void HttpServer::route(std::string method, std::string path_regex, Handler handler) {
    std::lock_guard lock(impl_->mu);
    impl_->routes.push_back({std::move(method), std::regex(path_regex), std::move(handler)});
}

void HttpServer::fallback(Handler handler) { impl_->fallback = std::move(handler); }

int HttpServer::start(const std::string& host, int port) {
    if (running()) {
        throw NetworkError("server already running");
    }
    if (port == 0) {
        port = impl_->server.bind_to_any_port(host);
        if (port <= 0) {
            throw NetworkError("could not bind an ephemeral port on " + host);
        }
    } else if (!impl_->server.bind_to_port(host, port)) {
        throw NetworkError("port " + std::to_string(port) + " on " + host + " is unavailable");
    }
    impl_->port = port;
    impl_->run_thread();
    return port;
}

void HttpServer::start_unix(const std::string& socket_path) {
    if (running()) {
        throw NetworkError("server already running");
    }
    std::error_code ec;
    std::filesystem::remove(socket_path, ec);
    impl_->server.set_address_family(AF_UNIX);
    if (!impl_->server.bind_to_port(socket_path, 80)) {
        throw NetworkError("could not bind unix socket " + socket_path);
    }
    impl_->run_thread();
}

void HttpServer::stop() {
    if (!impl_) {
        return;
    }
    if (impl_->thread.joinable()) {
        impl_->server.stop();
        impl_->thread.join();
    }
}

bool HttpServer::running() const { return impl_->thread.joinable() && impl_->server.is_running(); }

int HttpServer::port() const { return impl_->port; }

} // namespace vulnval
