#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vulnval {

/// Scheme + authority + path split of an http(s) URL.
struct Url {
    std::string scheme;
    std::string host;
    int port = 0;
    std::string path = "/"; ///< path plus query, always starting with '/'

    std::string authority() const { return host + ":" + std::to_string(port); }
    std::string origin() const { return scheme + "://" + authority(); }

    /// Throws std::invalid_argument on anything that is not http(s)://host[:port][/...].
    static Url parse(std::string_view text);
};

std::string sha256_hex(std::string_view data);
std::string random_hex(std::size_t bytes);

std::string now_iso8601();
std::string to_iso8601(std::chrono::system_clock::time_point tp);
std::optional<std::chrono::system_clock::time_point> parse_iso8601(std::string_view text);

std::string trim(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string replace_all(std::string s, std::string_view from, std::string_view to);
std::string collapse_whitespace(std::string_view s);
bool starts_with_ci(std::string_view s, std::string_view prefix);
std::string to_lower(std::string_view s);

/// Head + tail truncation with an explicit elision marker; result never exceeds max_length.
std::string truncate_middle(std::string_view s, std::size_t max_length);

/// Replaces `{{name}}` placeholders. Unknown names are left untouched.
std::string expand_placeholders(std::string_view text, const std::map<std::string, std::string>& values);

/// Replaces `${name}` in prompt templates. Unknown names expand to the empty string.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& values);

std::string read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
void append_line(const std::filesystem::path& path, std::string_view line);

/// application/x-www-form-urlencoded decoding of a single component.
std::string url_decode(std::string_view s);
std::string url_encode(std::string_view s);

} // namespace vulnval
