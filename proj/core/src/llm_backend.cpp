#include "vulnval/llm_backend.hpp"

#include "vulnval/errors.hpp"
#include "vulnval/http.hpp"
#include "vulnval/util.hpp"

#include "json_io.hpp"

#include <algorithm>
#include <cstdlib>

namespace vulnval {

namespace fs = std::filesystem;

std::string_view to_string(MessageRole v) {
    switch (v) {
    case MessageRole::system: return "system";
    case MessageRole::user: return "user";
    case MessageRole::assistant: return "assistant";
    }
    return "?";
}

std::string_view to_string(BackendMode v) {
    switch (v) {
    case BackendMode::live: return "live";
    case BackendMode::record: return "record";
    case BackendMode::replay: return "replay";
    }
    return "?";
}

BackendMode parse_backend_mode(std::string_view s) {
    if (s == "live") return BackendMode::live;
    if (s == "record") return BackendMode::record;
    if (s == "replay") return BackendMode::replay;
    throw std::invalid_argument("unknown backend mode '" + std::string(s) + "' (expected live, record or replay)");
}

Conversation Conversation::start(std::string system_prompt) {
    Conversation c;
    c.messages.push_back({MessageRole::system, std::move(system_prompt)});
    return c;
}

Conversation& Conversation::user(std::string content) {
    messages.push_back({MessageRole::user, std::move(content)});
    return *this;
}

Conversation& Conversation::assistant(std::string content) {
    messages.push_back({MessageRole::assistant, std::move(content)});
    return *this;
}

void Conversation::validate() const {
    if (messages.empty() || messages.front().role != MessageRole::system) {
        throw std::invalid_argument("conversation must start with a system message");
    }
    for (std::size_t i = 1; i < messages.size(); ++i) {
        if (messages[i].role == MessageRole::assistant && messages[i - 1].role == MessageRole::assistant) {
            throw std::invalid_argument("conversation has two consecutive assistant messages");
        }
    }
}

const std::string& Conversation::last_user() const {
    static const std::string empty;
    for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
        if (it->role == MessageRole::user) {
            return it->content;
        }
    }
    return empty;
}

void BackendConfig::validate() const {
    if ((mode == BackendMode::replay || mode == BackendMode::record) && !cassette_path) {
        throw std::invalid_argument(std::string(to_string(mode)) + " mode requires a cassette path");
    }
    if ((mode == BackendMode::live || mode == BackendMode::record) && (!endpoint_url || endpoint_url->empty())) {
        throw std::invalid_argument(std::string(to_string(mode)) + " mode requires an endpoint URL");
    }
    if ((mode == BackendMode::live || mode == BackendMode::record) && api_key_env.empty()) {
        throw std::invalid_argument("live backends need the name of the credential environment variable");
    }
    if (request_timeout.count() <= 0) {
        throw std::invalid_argument("request_timeout must be positive");
    }
}

void PromptNormalizer::add(std::string value, std::string token) {
    if (value.empty()) {
        return;
    }
    substitutions.emplace_back(std::move(value), std::move(token));
    // longest first so an origin is replaced before its authority
    std::stable_sort(substitutions.begin(), substitutions.end(),
                     [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
}

std::string PromptNormalizer::apply(std::string_view text) const {
    std::string out(text);
    for (const auto& [value, token] : substitutions) {
        out = replace_all(std::move(out), value, token);
    }
    return out;
}

std::string prompt_digest(std::string_view text, const PromptNormalizer& normalizer) {
    return sha256_hex(collapse_whitespace(normalizer.apply(text)));
}

Cassette::Cassette(fs::path path) : path_(std::move(path)) {
    std::error_code ec;
    if (!fs::exists(path_, ec)) {
        return;
    }
    int line_no = 0;
    for (const auto& line : split_lines(read_file(path_))) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        try {
            auto j = json::parse(line);
            CassetteEntry e;
            e.role = j.at("role").get<std::string>();
            e.turn = j.at("turn").get<int>();
            e.key_digest = j.at("key_digest").get<std::string>();
            e.request_excerpt = j.value("request_excerpt", "");
            e.response = j.at("response").get<std::string>();
            entries_.push_back(std::move(e));
        } catch (const std::exception& e) {
            throw BackendError(path_.string() + ":" + std::to_string(line_no) + ": malformed cassette entry: " + e.what());
        }
    }
}

const CassetteEntry* Cassette::find(std::string_view role, int turn, std::string_view digest) const {
    std::lock_guard lock(mu_);
    for (const auto& e : entries_) {
        if (e.role == role && e.turn == turn && e.key_digest == digest) {
            return &e;
        }
    }
    return nullptr;
}

bool Cassette::append(const CassetteEntry& entry) {
    std::lock_guard lock(mu_);
    for (const auto& e : entries_) {
        if (e.role == entry.role && e.turn == entry.turn && e.key_digest == entry.key_digest) {
            return false;
        }
    }
    entries_.push_back(entry);
    if (!path_.empty()) {
        json j{{"role", entry.role},
               {"turn", entry.turn},
               {"key_digest", entry.key_digest},
               {"request_excerpt", entry.request_excerpt},
               {"response", entry.response}};
        append_line(path_, j.dump());
    }
    return true;
}

std::size_t Cassette::size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

std::vector<CassetteEntry> Cassette::entries() const {
    std::lock_guard lock(mu_);
    return entries_;
}

void LlmBackend::begin_run(PromptNormalizer normalizer) {
    normalizer_ = std::move(normalizer);
    turns_.clear();
}

Message LlmBackend::complete(const Conversation& conversation, AgentRole role) {
    conversation.validate();
    if (conversation.messages.back().role == MessageRole::assistant) {
        throw std::invalid_argument("conversation must end with a user message");
    }
    int turn = turns_[role]++;
    Message reply{MessageRole::assistant, do_complete(conversation, role, turn)};
    if (observer_) {
        observer_(role, turn, conversation, reply);
    }
    return reply;
}

int LlmBackend::turns_taken(AgentRole role) const {
    auto it = turns_.find(role);
    return it == turns_.end() ? 0 : it->second;
}

ReplayBackend::ReplayBackend(const fs::path& cassette_path) : cassette_(cassette_path) {
    std::error_code ec;
    if (!fs::exists(cassette_path, ec)) {
        throw BackendError("cassette not found: " + cassette_path.string());
    }
}

std::string ReplayBackend::do_complete(const Conversation& conversation, AgentRole role, int turn) {
    auto digest = prompt_digest(conversation.last_user(), normalizer_);
    const auto* entry = cassette_.find(to_string(role), turn, digest);
    if (!entry) {
        throw CassetteMissError(std::string(to_string(role)), turn);
    }
    return entry->response;
}

LiveBackend::LiveBackend(BackendConfig config) : config_(std::move(config)) { config_.validate(); }

std::string LiveBackend::request(const Conversation& conversation, AgentRole role, int turn) const {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (!key || !*key) {
        throw BackendError("credential environment variable " + config_.api_key_env + " is not set");
    }
    json messages = json::array();
    for (const auto& m : conversation.messages) {
        messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    }
    json body{{"model", config_.model_name}, {"messages", messages}};

    HttpRequestSpec req;
    req.method = "POST";
    req.url = *config_.endpoint_url;
    req.headers = {{"Content-Type", "application/json"},
                   {"Authorization", std::string("Bearer ") + key},
                   {"X-Agent-Role", std::string(to_string(role))},
                   {"X-Turn-Index", std::to_string(turn)}};
    req.body = body.dump();
    req.timeout = config_.request_timeout;

    HttpResponse res;
    try {
        res = http_send(req);
    } catch (const NetworkError& e) {
        throw TransportError(e.what());
    }
    if (res.status < 200 || res.status >= 300) {
        throw RemoteStatusError(res.status, res.body);
    }
    try {
        auto j = json::parse(res.body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const std::exception& e) {
        throw BackendError(std::string("unexpected completion payload: ") + e.what());
    }
}

std::string LiveBackend::do_complete(const Conversation& conversation, AgentRole role, int turn) {
    return request(conversation, role, turn);
}

RecordingBackend::RecordingBackend(BackendConfig config) : live_(config), cassette_(*config.cassette_path) {}

std::string RecordingBackend::do_complete(const Conversation& conversation, AgentRole role, int turn) {
    auto text = live_.request(conversation, role, turn);
    auto normalized = normalizer_.apply(conversation.last_user());
    CassetteEntry entry;
    entry.role = std::string(to_string(role));
    entry.turn = turn;
    entry.key_digest = sha256_hex(collapse_whitespace(normalized));
    entry.request_excerpt = truncate_middle(collapse_whitespace(normalized), 240);
    entry.response = text;
    cassette_.append(entry);
    return text;
}

std::unique_ptr<LlmBackend> make_backend(const BackendConfig& config) {
    try {
        config.validate();
    } catch (const std::invalid_argument& e) {
        throw BackendError(e.what());
    }
    switch (config.mode) {
    case BackendMode::replay: return std::make_unique<ReplayBackend>(*config.cassette_path);
    case BackendMode::live: return std::make_unique<LiveBackend>(config);
    case BackendMode::record: return std::make_unique<RecordingBackend>(config);
    }
    throw BackendError("unknown backend mode");
}

} // namespace vulnval
