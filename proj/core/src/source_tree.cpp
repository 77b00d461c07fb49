#include "vulnval/source_tree.hpp"

#include "vulnval/errors.hpp"
#include "vulnval/util.hpp"

#include <algorithm>

namespace vulnval {

namespace fs = std::filesystem;

bool looks_binary(std::string_view content) {
    return content.substr(0, 8192).find('\0') != std::string_view::npos;
}

SourceTree::SourceTree(fs::path root, Observer observer) : root_(std::move(root)), observer_(std::move(observer)) {
    std::error_code ec;
    if (!fs::is_directory(root_, ec)) {
        throw SourceError("source root is not a directory: " + root_.string());
    }
    root_ = fs::canonical(root_);
}

void SourceTree::notify(std::string_view op, const std::string& rel) const {
    if (observer_) {
        observer_(op, rel);
    }
}

fs::path SourceTree::resolve(std::string_view relative) const {
    std::string rel = trim(relative);
    while (!rel.empty() && (rel.front() == '.' && (rel.size() == 1 || rel[1] == '/'))) {
        rel.erase(0, rel.size() == 1 ? 1 : 2);
    }
    fs::path p(rel);
    if (p.is_absolute()) {
        throw SourceError("path must be relative to the source root: " + rel);
    }
    auto candidate = (root_ / p).lexically_normal();
    std::error_code ec;
    auto resolved = fs::weakly_canonical(candidate, ec);
    if (ec) {
        resolved = candidate;
    }
    auto inside = resolved.lexically_relative(root_);
    if (!inside.empty() && *inside.begin() == "..") {
        throw SourceError("path escapes the source root: " + rel);
    }
    return resolved;
}

std::vector<std::string> SourceTree::list_dir(std::string_view relative) const {
    auto dir = resolve(relative);
    notify("list_dir", std::string(relative));
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
        throw SourceError("not a directory: " + std::string(relative));
    }
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir)) {
        auto name = entry.path().filename().string();
        if (entry.is_directory()) {
            name += "/";
        }
        names.push_back(name);
    }
    std::sort(names.begin(), names.end());
    return names;
}

std::string SourceTree::read_file(std::string_view relative) const {
    auto path = resolve(relative);
    notify("read_file", std::string(relative));
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) {
        throw SourceError("file not found: " + std::string(relative));
    }
    auto content = vulnval::read_file(path);
    if (looks_binary(content)) {
        throw SourceError("binary (non-text) file: " + std::string(relative));
    }
    return content;
}

bool SourceTree::path_exists(std::string_view relative) const {
    notify("path_exists", std::string(relative));
    try {
        auto p = resolve(relative);
        std::error_code ec;
        return fs::exists(p, ec);
    } catch (const SourceError&) {
        return false;
    }
}

std::vector<SourceTree::SearchHit> SourceTree::search_text(std::string_view needle, std::string_view relative,
                                                           std::size_t max_hits) const {
    std::vector<SearchHit> hits;
    if (needle.empty()) {
        return hits;
    }
    auto base = resolve(relative);
    notify("search_text", std::string(relative));
    std::vector<fs::path> files;
    std::error_code ec;
    if (fs::is_regular_file(base, ec)) {
        files.push_back(base);
    } else if (fs::is_directory(base, ec)) {
        for (const auto& entry : fs::recursive_directory_iterator(base)) {
            if (entry.is_regular_file()) {
                files.push_back(entry.path());
            }
        }
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
        auto content = vulnval::read_file(file);
        if (looks_binary(content)) {
            continue;
        }
        auto rel = file.lexically_relative(root_).generic_string();
        auto lines = split_lines(content);
        for (std::size_t i = 0; i < lines.size(); ++i) {
            if (lines[i].find(needle) != std::string::npos) {
                hits.push_back({rel, static_cast<int>(i + 1), lines[i]});
                if (hits.size() >= max_hits) {
                    return hits;
                }
            }
        }
    }
    return hits;
}

CodeSnippet SourceTree::extract(std::string_view file_path, int line_start, int line_end) const {
    if (line_start < 1 || line_end < line_start) {
        throw SourceError("invalid line range " + std::to_string(line_start) + "-" + std::to_string(line_end));
    }
    auto path = resolve(file_path);
    notify("extract", std::string(file_path));
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) {
        throw SourceError("file not found: " + std::string(file_path));
    }
    auto content = vulnval::read_file(path);
    if (looks_binary(content)) {
        throw SourceError("binary (non-text) file: " + std::string(file_path));
    }
    auto lines = split_lines(content);
    if (lines.empty()) {
        throw SourceError("file is empty: " + std::string(file_path));
    }
    CodeSnippet snippet;
    snippet.file_path = std::string(file_path);
    const int total = static_cast<int>(lines.size());
    snippet.line_start = std::min(line_start, total);
    snippet.line_end = std::min(line_end, total);
    snippet.clamped = snippet.line_start != line_start || snippet.line_end != line_end;
    std::vector<std::string> selected(lines.begin() + (snippet.line_start - 1), lines.begin() + snippet.line_end);
    snippet.text = join(selected, "\n");
    return snippet;
}

CodeSnippet SourceTree::extract(const VulnerabilityHint& hint) const {
    return extract(hint.file_path, hint.line_start, hint.line_end);
}

CodeSnippet extract_snippet(const fs::path& source_root, const VulnerabilityHint& hint) {
    return SourceTree(source_root).extract(hint);
}

} // namespace vulnval
