#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace vulnval {

using HeaderList = std::vector<std::pair<std::string, std::string>>;

/// Case-insensitive lookup of the first header named `name`.
std::optional<std::string> find_header(const HeaderList& headers, std::string_view name);
std::vector<std::string> find_headers(const HeaderList& headers, std::string_view name);

struct HttpRequestSpec {
    std::string method = "GET";
    std::string url;
    HeaderList headers;
    std::string body;
    std::chrono::milliseconds timeout{10000};
};

struct HttpResponse {
    int status = 0;
    HeaderList headers;
    std::string body;
    std::chrono::milliseconds elapsed{0};

    std::optional<std::string> header(std::string_view name) const { return find_header(headers, name); }
};

/// One HTTP exchange. Never follows redirects and never stores cookies.
/// Throws NetworkError on connection failure or timeout.
HttpResponse http_send(const HttpRequestSpec& request);

/// Same as http_send over a unix domain socket; `request.url` is the path part only.
HttpResponse http_send_unix(const std::string& socket_path, const HttpRequestSpec& request);

struct ServerRequest {
    std::string method;
    std::string path;
    std::string query;
    HeaderList headers;
    std::string body;
    std::string remote_addr;
    /// Query parameters and url-encoded form fields (form fields win on collision).
    std::multimap<std::string, std::string> params;

    std::optional<std::string> header(std::string_view name) const { return find_header(headers, name); }
    std::optional<std::string> param(const std::string& name) const;
    bool from_loopback() const;
};

struct ServerResponse {
    int status = 200;
    HeaderList headers;
    std::string body;
    std::string content_type = "text/plain; charset=utf-8";

    void set_header(std::string name, std::string value) { headers.emplace_back(std::move(name), std::move(value)); }
};

/// Small threaded HTTP server. Routes are matched in registration order on the
/// full path; unmatched requests go to the fallback (404 by default).
class HttpServer {
public:
    using Handler = std::function<void(const ServerRequest&, ServerResponse&)>;

    HttpServer();
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    void route(std::string method, std::string path_regex, Handler handler);
    void fallback(Handler handler);

    /// Binds and starts serving on a background thread. Port 0 picks a free port.
    /// Returns the bound port; throws NetworkError when the port is unavailable.
    int start(const std::string& host, int port);
    void start_unix(const std::string& socket_path);
    void stop();

    bool running() const;
    int port() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace vulnval
