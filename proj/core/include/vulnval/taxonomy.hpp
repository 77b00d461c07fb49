#pragma once

#include "vulnval/domain.hpp"

#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace vulnval {

/// Failure-cause labels and the primary -> secondary legality mapping, loaded from data.
class Taxonomy {
public:
    /// The mapping shipped with the library (assets/taxonomy.json).
    static const Taxonomy& builtin();
    /// Throws TaxonomyError on malformed documents or a secondary listed under two primaries.
    static Taxonomy parse(std::string_view json_text);
    static Taxonomy load(const std::filesystem::path& path);

    const std::vector<std::string>& agents() const { return agents_; }
    const std::vector<std::string>& primaries() const { return primaries_; }
    /// All secondary labels in document order.
    const std::vector<std::string>& secondaries() const { return secondaries_; }
    /// Throws TaxonomyError for an unknown secondary.
    const std::string& parent_of(const std::string& secondary) const;

    bool has_agent(const std::string& a) const;
    bool has_primary(const std::string& p) const;

private:
    std::vector<std::string> agents_;
    std::vector<std::string> primaries_;
    std::vector<std::string> secondaries_;
    std::map<std::string, std::string> parent_;
};

struct FailureAnnotation {
    std::string target_id;
    int run_index = 1;
    /// strategist, explorer or exploiter.
    std::string failure_agent;
    std::set<std::string> primary_causes;
    std::set<std::string> secondary_causes;
    std::string notes;

    bool operator==(const FailureAnnotation&) const = default;
};

/// Throws TaxonomyError naming the valid set for unknown labels, and for a secondary
/// cause whose parent primary is not listed.
void validate_annotation(const FailureAnnotation& annotation, const Taxonomy& taxonomy = Taxonomy::builtin());

std::string serialize_annotation(const FailureAnnotation& annotation);
/// Parses and validates one NDJSON line.
FailureAnnotation parse_annotation(std::string_view json_line, const Taxonomy& taxonomy = Taxonomy::builtin());
std::vector<FailureAnnotation> read_annotations(const std::filesystem::path& path,
                                                const Taxonomy& taxonomy = Taxonomy::builtin());

/// Validates the annotation against the referenced run and appends it to `annotations_path`.
/// Throws TaxonomyError for label problems and HarnessError when the run is missing,
/// succeeded, or was an infrastructure failure.
FailureAnnotation annotate_failure(std::span<const RunRecord> records, const FailureAnnotation& annotation,
                                   const std::filesystem::path& annotations_path,
                                   const Taxonomy& taxonomy = Taxonomy::builtin());

struct FailureDistribution {
    int total = 0;
    /// Keyed by label; every taxonomy label is present, zero when unused.
    std::map<std::string, int> agent_counts;
    std::map<std::string, int> primary_counts;
    std::map<std::string, int> secondary_counts;

    /// count / total, 0 for an empty set. Primary shares may sum above 1 (multi-label).
    double share(int count) const { return total == 0 ? 0.0 : static_cast<double>(count) / total; }
};

FailureDistribution failure_distribution(std::span<const FailureAnnotation> annotations,
                                         const Taxonomy& taxonomy = Taxonomy::builtin());

/// Per-agent table followed by per-cause table, percentages with one decimal.
std::string format_distribution(const FailureDistribution& d, const Taxonomy& taxonomy = Taxonomy::builtin());
std::string distribution_to_json(const FailureDistribution& d);

} // namespace vulnval
