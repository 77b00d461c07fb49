#pragma once

#include "vulnval/domain.hpp"

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace vulnval {

/// Read-only, root-confined view over a target's source code. Every read is
/// reported to the optional observer so callers can prove which runs touched
/// the tree.
class SourceTree {
public:
    using Observer = std::function<void(std::string_view operation, const std::string& relative_path)>;

    explicit SourceTree(std::filesystem::path root, Observer observer = {});

    const std::filesystem::path& root() const noexcept { return root_; }

    /// Resolves a relative path under the root. Throws SourceError on absolute
    /// paths or paths escaping the root.
    std::filesystem::path resolve(std::string_view relative) const;

    std::vector<std::string> list_dir(std::string_view relative) const;
    std::string read_file(std::string_view relative) const;
    bool path_exists(std::string_view relative) const;

    struct SearchHit {
        std::string file_path;
        int line = 0;
        std::string text;
    };
    /// Literal substring search over text files below `relative`, in path order.
    std::vector<SearchHit> search_text(std::string_view needle, std::string_view relative = "",
                                       std::size_t max_hits = 50) const;

    /// Inclusive 1-based range; ranges past end-of-file are clamped with the flag set.
    CodeSnippet extract(const VulnerabilityHint& hint) const;
    CodeSnippet extract(std::string_view file_path, int line_start, int line_end) const;

private:
    void notify(std::string_view op, const std::string& rel) const;

    std::filesystem::path root_;
    Observer observer_;
};

/// Convenience wrapper over SourceTree::extract.
CodeSnippet extract_snippet(const std::filesystem::path& source_root, const VulnerabilityHint& hint);

/// Heuristic: NUL byte in the first 8 KiB.
bool looks_binary(std::string_view content);

} // namespace vulnval
