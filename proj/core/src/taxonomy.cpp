#include "vulnval/taxonomy.hpp"

#include "vulnval/assets.hpp"
#include "vulnval/errors.hpp"
#include "vulnval/util.hpp"

#include "json_io.hpp"

#include <algorithm>
#include <cstdio>

namespace vulnval {

namespace {

bool contains(const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

std::string percent(double share) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f%%", share * 100.0);
    return buf;
}

} // namespace

Taxonomy Taxonomy::parse(std::string_view json_text) {
    Taxonomy t;
    try {
        // ordered_json keeps document order, which reports follow.
        auto j = nlohmann::ordered_json::parse(json_text);
        t.agents_ = j.at("agents").get<std::vector<std::string>>();
        for (const auto& [primary, children] : j.at("primary").items()) {
            t.primaries_.push_back(primary);
            for (const auto& c : children) {
                auto s = c.get<std::string>();
                if (!t.parent_.emplace(s, primary).second) {
                    throw TaxonomyError("secondary cause '" + s + "' listed under more than one primary");
                }
                t.secondaries_.push_back(s);
            }
        }
    } catch (const json::exception& e) {
        throw TaxonomyError(std::string("malformed taxonomy: ") + e.what());
    }
    if (t.agents_.empty() || t.primaries_.empty()) {
        throw TaxonomyError("taxonomy needs at least one agent and one primary cause");
    }
    return t;
}

Taxonomy Taxonomy::load(const std::filesystem::path& path) { return parse(read_file(path)); }

const Taxonomy& Taxonomy::builtin() {
    static const Taxonomy t = [] {
        auto doc = assets::find("taxonomy.json");
        if (!doc) {
            throw TaxonomyError("built-in taxonomy asset is missing");
        }
        return parse(*doc);
    }();
    return t;
}

const std::string& Taxonomy::parent_of(const std::string& secondary) const {
    auto it = parent_.find(secondary);
    if (it == parent_.end()) {
        throw TaxonomyError("unknown secondary cause '" + secondary + "' (valid: " + join(secondaries_, ", ") + ")");
    }
    return it->second;
}

bool Taxonomy::has_agent(const std::string& a) const { return contains(agents_, a); }
bool Taxonomy::has_primary(const std::string& p) const { return contains(primaries_, p); }

void validate_annotation(const FailureAnnotation& a, const Taxonomy& t) {
    if (a.target_id.empty()) {
        throw TaxonomyError("annotation needs a target_id");
    }
    if (!t.has_agent(a.failure_agent)) {
        throw TaxonomyError("unknown failure agent '" + a.failure_agent + "' (valid: " + join(t.agents(), ", ") + ")");
    }
    if (a.primary_causes.empty()) {
        throw TaxonomyError("annotation needs at least one primary cause");
    }
    for (const auto& p : a.primary_causes) {
        if (!t.has_primary(p)) {
            throw TaxonomyError("unknown primary cause '" + p + "' (valid: " + join(t.primaries(), ", ") + ")");
        }
    }
    for (const auto& s : a.secondary_causes) {
        const auto& parent = t.parent_of(s);
        if (!a.primary_causes.count(parent)) {
            throw TaxonomyError("secondary cause '" + s + "' requires primary cause '" + parent + "'");
        }
    }
}

std::string serialize_annotation(const FailureAnnotation& a) {
    json j{{"target_id", a.target_id},
           {"run_index", a.run_index},
           {"failure_agent", a.failure_agent},
           {"primary_causes", a.primary_causes},
           {"secondary_causes", a.secondary_causes},
           {"notes", a.notes}};
    return j.dump();
}

FailureAnnotation parse_annotation(std::string_view json_line, const Taxonomy& taxonomy) {
    FailureAnnotation a;
    try {
        auto j = json::parse(json_line);
        a.target_id = j.at("target_id").get<std::string>();
        a.run_index = j.at("run_index").get<int>();
        a.failure_agent = j.at("failure_agent").get<std::string>();
        a.primary_causes = j.at("primary_causes").get<std::set<std::string>>();
        a.secondary_causes = j.value("secondary_causes", std::set<std::string>{});
        a.notes = j.value("notes", std::string{});
    } catch (const json::exception& e) {
        throw TaxonomyError(std::string("malformed annotation: ") + e.what());
    }
    validate_annotation(a, taxonomy);
    return a;
}

std::vector<FailureAnnotation> read_annotations(const std::filesystem::path& path, const Taxonomy& taxonomy) {
    std::vector<FailureAnnotation> out;
    int line_no = 0;
    for (const auto& line : split_lines(read_file(path))) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        try {
            out.push_back(parse_annotation(line, taxonomy));
        } catch (const TaxonomyError& e) {
            throw TaxonomyError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

FailureAnnotation annotate_failure(std::span<const RunRecord> records, const FailureAnnotation& annotation,
                                   const std::filesystem::path& annotations_path, const Taxonomy& taxonomy) {
    validate_annotation(annotation, taxonomy);
    auto it = std::find_if(records.begin(), records.end(), [&](const RunRecord& r) {
        return r.target_id == annotation.target_id && r.run_index == annotation.run_index;
    });
    const auto ref = annotation.target_id + " run " + std::to_string(annotation.run_index);
    if (it == records.end()) {
        throw HarnessError("no record for " + ref);
    }
    if (it->success) {
        throw HarnessError(ref + " succeeded; only failed runs can be annotated");
    }
    if (it->infra_failure) {
        throw HarnessError(ref + " was an infrastructure failure and is excluded from failure analysis");
    }
    append_line(annotations_path, serialize_annotation(annotation));
    return annotation;
}

FailureDistribution failure_distribution(std::span<const FailureAnnotation> annotations, const Taxonomy& t) {
    FailureDistribution d;
    for (const auto& a : t.agents()) d.agent_counts[a] = 0;
    for (const auto& p : t.primaries()) d.primary_counts[p] = 0;
    for (const auto& s : t.secondaries()) d.secondary_counts[s] = 0;
    for (const auto& a : annotations) {
        ++d.total;
        ++d.agent_counts[a.failure_agent];
        for (const auto& p : a.primary_causes) ++d.primary_counts[p];
        for (const auto& s : a.secondary_causes) ++d.secondary_counts[s];
    }
    return d;
}

std::string format_distribution(const FailureDistribution& d, const Taxonomy& t) {
    auto row = [&](const std::string& label, int count, int width) {
        std::string l = label;
        l.resize(std::max<std::size_t>(l.size() + 1, static_cast<std::size_t>(width)), ' ');
        return l + std::to_string(count) + " (" + percent(d.share(count)) + ")\n";
    };
    std::string out = "Failure-inducing agent (" + std::to_string(d.total) + " annotated failures)\n";
    for (const auto& a : t.agents()) {
        out += "  " + row(a, d.agent_counts.at(a), 14);
    }
    out += "Failure causes\n";
    for (const auto& p : t.primaries()) {
        out += "  " + row(p, d.primary_counts.at(p), 40);
        for (const auto& s : t.secondaries()) {
            if (t.parent_of(s) == p && d.secondary_counts.at(s) > 0) {
                out += "    " + row(s, d.secondary_counts.at(s), 38);
            }
        }
    }
    return out;
}

std::string distribution_to_json(const FailureDistribution& d) {
    auto section = [&](const std::map<std::string, int>& counts) {
        json j = json::object();
        for (const auto& [k, v] : counts) {
            j[k] = {{"count", v}, {"share", d.share(v)}};
        }
        return j;
    };
    json j{{"total", d.total},
           {"agents", section(d.agent_counts)},
           {"primary_causes", section(d.primary_counts)},
           {"secondary_causes", section(d.secondary_counts)}};
    return j.dump();
}

} // namespace vulnval
