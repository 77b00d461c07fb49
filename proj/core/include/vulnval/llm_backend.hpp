#pragma once

#include "vulnval/domain.hpp"

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace vulnval {

enum class MessageRole { system, user, assistant };

std::string_view to_string(MessageRole v);

struct Message {
    MessageRole role = MessageRole::user;
    std::string content;

    bool operator==(const Message&) const = default;
};

struct Conversation {
    std::vector<Message> messages;

    static Conversation start(std::string system_prompt);
    Conversation& user(std::string content);
    Conversation& assistant(std::string content);

    /// Throws std::invalid_argument unless the first message is system and no two
    /// assistant messages are adjacent.
    void validate() const;
    /// Content of the last user message, empty when there is none.
    const std::string& last_user() const;
};

enum class BackendMode { live, record, replay };

std::string_view to_string(BackendMode v);
BackendMode parse_backend_mode(std::string_view s);

struct BackendConfig {
    BackendMode mode = BackendMode::replay;
    std::string model_name = "default";
    /// Full chat-completions URL of an OpenAI-compatible server.
    std::optional<std::string> endpoint_url;
    std::optional<std::filesystem::path> cassette_path;
    std::chrono::seconds request_timeout{120};
    /// Name of the environment variable holding the API key.
    std::string api_key_env = "VULNVAL_API_KEY";

    /// Throws std::invalid_argument when required fields for the mode are missing.
    void validate() const;
};

/// Run-specific values replaced by stable tokens before digesting a prompt, so a
/// cassette recorded against one port or workdir replays against another.
struct PromptNormalizer {
    std::vector<std::pair<std::string, std::string>> substitutions;

    void add(std::string value, std::string token);
    std::string apply(std::string_view text) const;
};

/// SHA-256 hex of the normalized, whitespace-collapsed text.
std::string prompt_digest(std::string_view text, const PromptNormalizer& normalizer);

struct CassetteEntry {
    std::string role;
    int turn = 0;
    std::string key_digest;
    std::string request_excerpt;
    std::string response;

    bool operator==(const CassetteEntry&) const = default;
};

/// NDJSON cassette. Appends are serialized and skip keys already present.
class Cassette {
public:
    Cassette() = default;
    /// Loads existing entries; a missing file starts an empty cassette.
    explicit Cassette(std::filesystem::path path);

    const CassetteEntry* find(std::string_view role, int turn, std::string_view digest) const;
    /// Returns false when the key already exists.
    bool append(const CassetteEntry& entry);
    std::size_t size() const;
    std::vector<CassetteEntry> entries() const;

private:
    std::filesystem::path path_;
    std::vector<CassetteEntry> entries_;
    mutable std::mutex mu_;
};

/// Hook invoked after every completed turn (instrumentation and prompt capture).
using TurnObserver = std::function<void(AgentRole role, int turn, const Conversation& conversation, const Message& reply)>;

class LlmBackend {
public:
    virtual ~LlmBackend() = default;

    /// Resets per-role turn counters and installs the normalizer for the next run.
    void begin_run(PromptNormalizer normalizer);
    void set_observer(TurnObserver observer) { observer_ = std::move(observer); }

    /// Throws CassetteMissError, TransportError or RemoteStatusError.
    Message complete(const Conversation& conversation, AgentRole role);

    int turns_taken(AgentRole role) const;
    const PromptNormalizer& normalizer() const { return normalizer_; }

protected:
    virtual std::string do_complete(const Conversation& conversation, AgentRole role, int turn) = 0;

    PromptNormalizer normalizer_;

private:
    std::map<AgentRole, int> turns_;
    TurnObserver observer_;
};

class ReplayBackend : public LlmBackend {
public:
    explicit ReplayBackend(const std::filesystem::path& cassette_path);

protected:
    std::string do_complete(const Conversation& conversation, AgentRole role, int turn) override;

private:
    Cassette cassette_;
};

/// OpenAI-compatible chat completions over HTTP. Sends X-Agent-Role and
/// X-Turn-Index headers so scripted servers can answer deterministically.
class LiveBackend : public LlmBackend {
public:
    explicit LiveBackend(BackendConfig config);

    std::string request(const Conversation& conversation, AgentRole role, int turn) const;

protected:
    std::string do_complete(const Conversation& conversation, AgentRole role, int turn) override;

private:
    BackendConfig config_;
};

/// Live backend that appends every exchange to a cassette.
class RecordingBackend : public LlmBackend {
public:
    explicit RecordingBackend(BackendConfig config);

    std::size_t cassette_size() const { return cassette_.size(); }

protected:
    std::string do_complete(const Conversation& conversation, AgentRole role, int turn) override;

private:
    LiveBackend live_;
    Cassette cassette_;
};

std::unique_ptr<LlmBackend> make_backend(const BackendConfig& config);

} // namespace vulnval
