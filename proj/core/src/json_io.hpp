#pragma once

// nlohmann::json conversions for the domain types. Internal to the library.

#include "json.hpp"

#include "vulnval/domain.hpp"

namespace vulnval {

using json = nlohmann::json;

void to_json(json& j, const VulnerabilityHint& v);
void to_json(json& j, const OracleSpec& v);
void to_json(json& j, const CodeSnippet& v);
void to_json(json& j, const ContextEntry& v);
void to_json(json& j, const TraceEvent& v);
void to_json(json& j, const Verdict& v);
void to_json(json& j, const RunRecord& v);
void to_json(json& j, const PlanStep& v);
void to_json(json& j, const ExploitPlan& v);

void from_json(const json& j, CodeSnippet& v);
void from_json(const json& j, ContextEntry& v);
void from_json(const json& j, TraceEvent& v);
void from_json(const json& j, Verdict& v);
void from_json(const json& j, RunRecord& v);

json manifest_to_json(const TargetManifest& m);

/// Typed field access with a descriptive exception on type mismatch.
template <typename T>
std::optional<T> optional_field(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        return std::nullopt;
    }
    return it->get<T>();
}

} // namespace vulnval
