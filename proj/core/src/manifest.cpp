#include "vulnval/domain.hpp"
#include "vulnval/errors.hpp"
#include "vulnval/util.hpp"

#include "json_io.hpp"

#include <regex>

namespace vulnval {

namespace fs = std::filesystem;

namespace {

const std::map<AttackType, std::vector<std::string>>& required_oracle_params() {
    static const std::map<AttackType, std::vector<std::string>> table{
        {AttackType::file_creation, {"expected_path", "expected_token"}},
        {AttackType::file_access, {"secret_token"}},
        {AttackType::database_access, {"secret_token"}},
        {AttackType::database_modification, {"probe_command", "expected_change_marker"}},
        {AttackType::privilege_escalation, {"probe_request", "admin_marker"}},
        {AttackType::outbound_service, {"listener_token"}},
        {AttackType::denial_of_service, {"health_url", "failure_threshold_seconds"}},
    };
    return table;
}

const json& require(const json& obj, const char* key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        throw ManifestError(path.empty() ? key : path + "." + key, "missing required field");
    }
    return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& path) {
    const auto& v = require(obj, key, path);
    auto field = path.empty() ? std::string(key) : path + "." + key;
    if (!v.is_string()) {
        throw ManifestError(field, "expected a string");
    }
    auto s = v.get<std::string>();
    if (trim(s).empty()) {
        throw ManifestError(field, "must not be empty");
    }
    return s;
}

std::optional<std::string> optional_string(const json& obj, const char* key, const std::string& field) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        return std::nullopt;
    }
    if (!it->is_string()) {
        throw ManifestError(field, "expected a string");
    }
    return it->get<std::string>();
}

int require_int(const json& obj, const char* key, const std::string& path) {
    const auto& v = require(obj, key, path);
    if (!v.is_number_integer()) {
        throw ManifestError(path + "." + key, "expected an integer");
    }
    return v.get<int>();
}

template <typename F>
auto wrap_enum(const std::string& field, F&& parse) {
    try {
        return parse();
    } catch (const std::invalid_argument& e) {
        throw ManifestError(field, e.what());
    }
}

bool has_dotdot_segment(std::string_view p) {
    for (const auto& seg : split(p, '/')) {
        if (seg == "..") {
            return true;
        }
    }
    return false;
}

VulnerabilityHint parse_hint(const json& j) {
    if (!j.is_object()) {
        throw ManifestError("hint", "expected an object");
    }
    VulnerabilityHint h;
    h.cwe_id = require_string(j, "cwe_id", "hint");
    h.file_path = require_string(j, "file_path", "hint");
    h.line_start = require_int(j, "line_start", "hint");
    h.line_end = require_int(j, "line_end", "hint");
    h.note = optional_string(j, "note", "hint.note");
    validate_hint(h);
    return h;
}

OracleSpec parse_oracle(const json& j) {
    if (!j.is_object()) {
        throw ManifestError("oracle", "expected an object");
    }
    OracleSpec o;
    o.oracle_id = require_string(j, "oracle_id", "oracle");
    auto kind = require_string(j, "kind", "oracle");
    o.kind = wrap_enum("oracle.kind", [&] { return parse_attack_type(kind); });
    auto it = j.find("params");
    if (it != j.end() && !it->is_null()) {
        if (!it->is_object()) {
            throw ManifestError("oracle.params", "expected an object");
        }
        for (const auto& [k, v] : it->items()) {
            if (v.is_string()) {
                o.params[k] = v.get<std::string>();
            } else if (v.is_number() || v.is_boolean()) {
                o.params[k] = v.dump();
            } else {
                throw ManifestError("oracle.params." + k, "expected a scalar value");
            }
        }
    }
    validate_oracle(o);
    return o;
}

} // namespace

void validate_hint(const VulnerabilityHint& h) {
    static const std::regex cwe_shape(R"(^CWE-[0-9]+$)");
    if (!std::regex_match(h.cwe_id, cwe_shape)) {
        throw ManifestError("hint.cwe_id", "expected the form CWE-<digits>, got '" + h.cwe_id + "'");
    }
    if (h.file_path.empty()) {
        throw ManifestError("hint.file_path", "must not be empty");
    }
    if (h.file_path.front() == '/' || h.file_path.front() == '\\') {
        throw ManifestError("hint.file_path", "must be relative to source_root");
    }
    if (has_dotdot_segment(h.file_path)) {
        throw ManifestError("hint.file_path", "must not contain '..' segments");
    }
    if (h.line_start < 1) {
        throw ManifestError("hint.line_start", "line_start must be >= 1");
    }
    if (h.line_end < h.line_start) {
        throw ManifestError("hint.line_end", "line_end < line_start");
    }
}

void validate_oracle(const OracleSpec& o) {
    if (o.oracle_id.empty()) {
        throw ManifestError("oracle.oracle_id", "must not be empty");
    }
    for (const auto& name : required_oracle_params().at(o.kind)) {
        auto it = o.params.find(name);
        if (it == o.params.end() || it->second.empty()) {
            throw ManifestError("oracle.params." + name,
                                "missing required parameter for oracle kind " + std::string(to_string(o.kind)));
        }
    }
    if (o.kind == AttackType::denial_of_service) {
        const auto& threshold = o.params.at("failure_threshold_seconds");
        try {
            if (std::stod(threshold) <= 0) {
                throw std::invalid_argument("non-positive");
            }
        } catch (const std::exception&) {
            throw ManifestError("oracle.params.failure_threshold_seconds", "expected a positive number");
        }
    }
}

TargetManifest parse_target_manifest(std::string_view document, const ManifestParseOptions& options) {
    json j;
    try {
        j = json::parse(document);
    } catch (const json::parse_error& e) {
        throw ManifestError("", std::string("malformed manifest document: ") + e.what());
    }
    if (!j.is_object()) {
        throw ManifestError("", "manifest must be a JSON object");
    }

    TargetManifest m;
    m.target_id = require_string(j, "target_id", "");
    m.base_url = require_string(j, "base_url", "");
    try {
        (void)Url::parse(m.base_url);
    } catch (const std::invalid_argument& e) {
        throw ManifestError("base_url", e.what());
    }
    auto attack = require_string(j, "attack_type", "");
    m.attack_type = wrap_enum("attack_type", [&] { return parse_attack_type(attack); });
    if (auto mode = optional_string(j, "mode", "mode")) {
        m.mode = wrap_enum("mode", [&] { return parse_manifest_mode(*mode); });
    }
    m.oracle = parse_oracle(require(j, "oracle", ""));
    if (m.oracle.kind != m.attack_type) {
        throw ManifestError("oracle.kind", "oracle kind " + std::string(to_string(m.oracle.kind)) +
                                               " does not match attack_type " + std::string(to_string(m.attack_type)));
    }
    m.reset_hook = optional_string(j, "reset_hook", "reset_hook");
    m.objective = optional_string(j, "objective", "objective");

    if (auto root = optional_string(j, "source_root", "source_root")) {
        fs::path p(*root);
        if (p.is_relative() && options.base_dir) {
            p = (*options.base_dir / p).lexically_normal();
        }
        m.source_root = p;
    }
    if (auto it = j.find("hint"); it != j.end() && !it->is_null()) {
        m.hint = parse_hint(*it);
    }
    if (auto it = j.find("sandbox"); it != j.end() && !it->is_null()) {
        if (!it->is_object()) {
            throw ManifestError("sandbox", "expected an object");
        }
        SandboxSettings s;
        s.runtime = optional_string(*it, "runtime", "sandbox.runtime").value_or("local");
        if (s.runtime != "local" && s.runtime != "container") {
            throw ManifestError("sandbox.runtime", "expected 'local' or 'container'");
        }
        s.image = optional_string(*it, "image", "sandbox.image").value_or("");
        s.socket = optional_string(*it, "socket", "sandbox.socket").value_or(s.socket);
        if (s.runtime == "container" && s.image.empty()) {
            throw ManifestError("sandbox.image", "container runtime requires an image");
        }
        m.sandbox = s;
    }

    if (m.mode == ManifestMode::greybox) {
        if (!m.source_root) {
            throw ManifestError("source_root", "missing required field (grey-box mode)");
        }
        if (!m.hint) {
            throw ManifestError("hint", "missing required field (grey-box mode)");
        }
        if (options.check_filesystem) {
            std::error_code ec;
            if (!fs::is_directory(*m.source_root, ec)) {
                throw ManifestError("source_root", "directory does not exist: " + m.source_root->string());
            }
            auto resolved = fs::weakly_canonical(*m.source_root / m.hint->file_path, ec);
            auto root = fs::weakly_canonical(*m.source_root, ec);
            auto rel = resolved.lexically_relative(root);
            if (rel.empty() || *rel.begin() == ".." || !fs::is_regular_file(resolved, ec)) {
                throw ManifestError("hint.file_path", "does not resolve to a file under source_root: " + m.hint->file_path);
            }
        }
    }
    return m;
}

TargetManifest load_target_manifest(const fs::path& path, bool check_filesystem) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error& e) {
        throw ManifestError("", e.what());
    }
    ManifestParseOptions opts;
    opts.check_filesystem = check_filesystem;
    opts.base_dir = fs::absolute(path).parent_path();
    return parse_target_manifest(text, opts);
}

json manifest_to_json(const TargetManifest& m) {
    json j{{"target_id", m.target_id},
           {"base_url", m.base_url},
           {"attack_type", to_string(m.attack_type)},
           {"oracle", m.oracle},
           {"mode", to_string(m.mode)}};
    if (m.source_root) {
        j["source_root"] = m.source_root->string();
    }
    if (m.hint) {
        j["hint"] = *m.hint;
    }
    if (m.reset_hook) {
        j["reset_hook"] = *m.reset_hook;
    }
    if (m.objective) {
        j["objective"] = *m.objective;
    }
    if (m.sandbox) {
        j["sandbox"] = json{{"runtime", m.sandbox->runtime}, {"image", m.sandbox->image}, {"socket", m.sandbox->socket}};
    }
    return j;
}

std::string serialize_target_manifest(const TargetManifest& m) { return manifest_to_json(m).dump(2); }

} // namespace vulnval
