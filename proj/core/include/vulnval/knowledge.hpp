#pragma once

#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

namespace vulnval {

enum class FactCategory { endpoint, config_constraint, auth_requirement, code_location, error_signature };

std::string_view to_string(FactCategory v);
FactCategory parse_fact_category(std::string_view s);

struct FactEntry {
    FactCategory category = FactCategory::endpoint;
    std::string body;
    std::string source_run;
};

/// Persistent, append-only fact set for one target, deduplicated by (category, body).
/// Backed by an NDJSON file; writes to the same file are serialized process-wide.
class KnowledgeStore {
public:
    /// Loads existing facts; a missing file starts empty.
    explicit KnowledgeStore(std::filesystem::path path);

    /// Returns false for a duplicate. Bodies are whitespace-collapsed before comparison.
    bool add(FactEntry fact);

    std::vector<FactEntry> facts() const;
    std::size_t size() const;
    const std::filesystem::path& path() const { return path_; }

    /// Prompt section listing every fact, or an empty string when there are none.
    std::string render() const;

private:
    std::filesystem::path path_;
    std::vector<FactEntry> facts_;
    mutable std::mutex mu_;
};

/// <dir>/<target_id>.ndjson
std::filesystem::path knowledge_file(const std::filesystem::path& dir, const std::string& target_id);

} // namespace vulnval
