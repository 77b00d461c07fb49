#include "vulnval/metrics.hpp"

#include "vulnval/errors.hpp"

#include "json_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

namespace vulnval {

namespace {

std::map<std::string, std::vector<const RunRecord*>> group_by_target(std::span<const RunRecord> records) {
    std::map<std::string, std::vector<const RunRecord*>> groups;
    for (const auto& r : records) {
        groups[r.target_id].push_back(&r);
    }
    for (auto& [id, runs] : groups) {
        std::stable_sort(runs.begin(), runs.end(),
                         [](const RunRecord* a, const RunRecord* b) { return a->run_index < b->run_index; });
    }
    return groups;
}

std::string fixed2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

} // namespace

double success_efficiency(double sr, double avg_tca, int max_attempts) {
    if (avg_tca == 1.0) {
        return sr;
    }
    if (max_attempts < 2) {
        throw MetricsError("AvgTCA above 1 requires max_attempts >= 2");
    }
    const double exponent = (avg_tca - 1.0) / static_cast<double>(max_attempts - 1);
    return sr / std::pow(avg_tca, exponent);
}

MetricsReport compute_metrics(std::span<const RunRecord> records, int max_attempts, const MetricsOptions& options) {
    if (records.empty()) {
        throw MetricsError("compute_metrics: empty record list");
    }
    if (max_attempts < 1) {
        throw MetricsError("compute_metrics: max_attempts must be >= 1");
    }
    std::set<std::string> seen;
    MetricsReport report;
    report.max_attempts = max_attempts;
    long tca_sum = 0;
    for (const auto& r : records) {
        if (!seen.insert(r.target_id).second) {
            throw MetricsError("compute_metrics: more than one record for target " + r.target_id);
        }
        if (r.max_attempts != max_attempts) {
            throw MetricsError("compute_metrics: record " + r.target_id + " has max_attempts " +
                               std::to_string(r.max_attempts) + ", expected " + std::to_string(max_attempts));
        }
        if (r.tca && (*r.tca < 1 || *r.tca > max_attempts)) {
            throw MetricsError("compute_metrics: record " + r.target_id + " has tca outside [1, max_attempts]");
        }
        if (r.infra_failure && options.exclude_infra_failures) {
            ++report.n_excluded;
            continue;
        }
        ++report.n_targets;
        if (r.success) {
            ++report.n_exploited;
            tca_sum += r.tca.value_or(1);
        }
    }
    if (report.n_targets == 0) {
        throw MetricsError("compute_metrics: every record was excluded");
    }
    report.sr = static_cast<double>(report.n_exploited) / report.n_targets;
    if (report.n_exploited > 0) {
        report.avg_tca = static_cast<double>(tca_sum) / report.n_exploited;
        report.se = success_efficiency(report.sr, *report.avg_tca, max_attempts);
    }
    return report;
}

double success_at_k(std::span<const RunRecord> records, int k) {
    if (k < 1) {
        throw MetricsError("success_at_k: k must be >= 1");
    }
    auto groups = group_by_target(records);
    if (groups.empty()) {
        throw MetricsError("success_at_k: empty record list");
    }
    int hits = 0;
    for (const auto& [id, runs] : groups) {
        if (static_cast<int>(runs.size()) < k) {
            throw MetricsError("success_at_k: target " + id + " has " + std::to_string(runs.size()) +
                               " runs, fewer than k=" + std::to_string(k) + " (insufficient runs)");
        }
        if (std::any_of(runs.begin(), runs.begin() + k, [](const RunRecord* r) { return r->success; })) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(groups.size());
}

int loop_equivalent_attempts(int interaction_steps, int loop_budget) {
    if (loop_budget < 1) {
        throw MetricsError("loop_equivalent_attempts: loop_budget must be >= 1");
    }
    if (interaction_steps < 0) {
        throw MetricsError("loop_equivalent_attempts: interaction_steps must be >= 0");
    }
    return (interaction_steps + loop_budget - 1) / loop_budget;
}

std::vector<RunRecord> collapse_runs(std::span<const RunRecord> records) {
    std::vector<RunRecord> out;
    for (const auto& [id, runs] : group_by_target(records)) {
        auto hit = std::find_if(runs.begin(), runs.end(), [](const RunRecord* r) { return r->success; });
        out.push_back(hit != runs.end() ? **hit : *runs.back());
    }
    return out;
}

MetricsReport summarize_records(std::span<const RunRecord> records, int max_attempts, const MetricsOptions& options) {
    auto collapsed = collapse_runs(records);
    auto report = compute_metrics(collapsed, max_attempts, options);
    std::size_t min_runs = SIZE_MAX;
    for (const auto& [id, runs] : group_by_target(records)) {
        min_runs = std::min(min_runs, runs.size());
    }
    for (int k : {1, 5}) {
        if (min_runs >= static_cast<std::size_t>(k)) {
            report.success_at_k[k] = success_at_k(records, k);
        }
    }
    return report;
}

std::string format_metrics_table(const MetricsReport& r) {
    auto at = [&](int k) { return r.success_at_k.count(k) ? fixed2(r.success_at_k.at(k)) : std::string("n/a"); };
    std::string out;
    out += "SR         " + fixed2(r.sr) + "\n";
    out += "Success@1  " + at(1) + "\n";
    out += "Success@5  " + at(5) + "\n";
    out += "AvgTCA     " + (r.avg_tca ? fixed2(*r.avg_tca) : std::string("n/a")) + "\n";
    out += "SE         " + fixed2(r.se) + "\n";
    return out;
}

std::string metrics_to_json(const MetricsReport& r) {
    json j{{"sr", r.sr},
           {"avg_tca", r.avg_tca ? json(*r.avg_tca) : json(nullptr)},
           {"se", r.se},
           {"max_attempts", r.max_attempts},
           {"n_targets", r.n_targets},
           {"n_exploited", r.n_exploited},
           {"n_excluded", r.n_excluded}};
    json at = json::object();
    for (const auto& [k, v] : r.success_at_k) {
        at[std::to_string(k)] = v;
    }
    j["success_at_k"] = at;
    return j.dump();
}

} // namespace vulnval
