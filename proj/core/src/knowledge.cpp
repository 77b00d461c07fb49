#include "vulnval/knowledge.hpp"

#include "vulnval/errors.hpp"
#include "vulnval/util.hpp"

#include "json_io.hpp"

#include <map>
#include <stdexcept>

namespace vulnval {

namespace fs = std::filesystem;

std::string_view to_string(FactCategory v) {
    switch (v) {
    case FactCategory::endpoint: return "endpoint";
    case FactCategory::config_constraint: return "config_constraint";
    case FactCategory::auth_requirement: return "auth_requirement";
    case FactCategory::code_location: return "code_location";
    case FactCategory::error_signature: return "error_signature";
    }
    return "?";
}

FactCategory parse_fact_category(std::string_view s) {
    if (s == "endpoint") return FactCategory::endpoint;
    if (s == "config_constraint") return FactCategory::config_constraint;
    if (s == "auth_requirement") return FactCategory::auth_requirement;
    if (s == "code_location") return FactCategory::code_location;
    if (s == "error_signature") return FactCategory::error_signature;
    throw std::invalid_argument("unknown fact category '" + std::string(s) +
                                "' (expected endpoint, config_constraint, auth_requirement, code_location or "
                                "error_signature)");
}

namespace {

// One lock per store file so concurrent runs on a target append in turn.
std::mutex& file_mutex(const fs::path& path) {
    static std::mutex guard;
    static std::map<std::string, std::unique_ptr<std::mutex>> locks;
    std::lock_guard lock(guard);
    auto& m = locks[fs::absolute(path).lexically_normal().string()];
    if (!m) {
        m = std::make_unique<std::mutex>();
    }
    return *m;
}

} // namespace

KnowledgeStore::KnowledgeStore(fs::path path) : path_(std::move(path)) {
    std::error_code ec;
    if (!fs::exists(path_, ec)) {
        return;
    }
    std::lock_guard file_lock(file_mutex(path_));
    int line_no = 0;
    for (const auto& line : split_lines(read_file(path_))) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        try {
            auto j = json::parse(line);
            facts_.push_back({parse_fact_category(j.at("category").get<std::string>()), j.at("body").get<std::string>(),
                              j.value("source_run", std::string())});
        } catch (const std::exception& e) {
            throw Error(path_.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

bool KnowledgeStore::add(FactEntry fact) {
    fact.body = collapse_whitespace(fact.body);
    if (fact.body.empty()) {
        return false;
    }
    std::lock_guard lock(mu_);
    for (const auto& f : facts_) {
        if (f.category == fact.category && f.body == fact.body) {
            return false;
        }
    }
    {
        std::lock_guard file_lock(file_mutex(path_));
        if (path_.has_parent_path()) {
            fs::create_directories(path_.parent_path());
        }
        append_line(path_, json{{"category", to_string(fact.category)}, {"body", fact.body}, {"source_run", fact.source_run}}
                               .dump());
    }
    facts_.push_back(std::move(fact));
    return true;
}

std::vector<FactEntry> KnowledgeStore::facts() const {
    std::lock_guard lock(mu_);
    return facts_;
}

std::size_t KnowledgeStore::size() const {
    std::lock_guard lock(mu_);
    return facts_.size();
}

std::string KnowledgeStore::render() const {
    std::lock_guard lock(mu_);
    if (facts_.empty()) {
        return "";
    }
    std::string out = "\n## Known facts about this target\n";
    for (const auto& f : facts_) {
        out += "- " + std::string(to_string(f.category)) + ": " + f.body + "\n";
    }
    return out;
}

fs::path knowledge_file(const fs::path& dir, const std::string& target_id) { return dir / (target_id + ".ndjson"); }

} // namespace vulnval
