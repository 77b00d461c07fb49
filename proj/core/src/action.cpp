#include "vulnval/domain.hpp"
#include "vulnval/util.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <stdexcept>

namespace vulnval {

namespace {

constexpr std::array<std::string_view, 7> directives{"REQUEST:", "HEADER:", "BODY:", "RUN:", "WRITE:", "CONTENT:", "EXTRACT:"};

std::optional<std::string_view> directive_of(std::string_view line) {
    for (auto d : directives) {
        if (line.substr(0, d.size()) == d) {
            return d;
        }
    }
    return std::nullopt;
}

std::size_t indent_of(std::string_view line) {
    std::size_t n = 0;
    while (n < line.size() && (line[n] == ' ' || line[n] == '\t')) {
        ++n;
    }
    return n;
}

Extraction parse_extraction(std::string_view spec) {
    auto arrow = spec.find("<-");
    if (arrow == std::string_view::npos) {
        throw std::invalid_argument("EXTRACT expects '<name> <- <source> /<regex>/'");
    }
    Extraction ex;
    ex.name = trim(spec.substr(0, arrow));
    auto rest = std::string_view(spec).substr(arrow + 2);
    auto open = rest.find('/');
    auto close = rest.rfind('/');
    if (open == std::string_view::npos || close == open) {
        throw std::invalid_argument("EXTRACT regex must be delimited by slashes");
    }
    ex.source = trim(rest.substr(0, open));
    ex.pattern = std::string(rest.substr(open + 1, close - open - 1));
    if (ex.name.empty() || !std::all_of(ex.name.begin(), ex.name.end(), [](unsigned char c) {
            return std::isalnum(c) || c == '_';
        })) {
        throw std::invalid_argument("EXTRACT name must be alphanumeric: '" + ex.name + "'");
    }
    if (ex.source.empty()) {
        ex.source = "body";
    }
    if (ex.source != "body" && ex.source != "stdout" && ex.source.rfind("header:", 0) != 0) {
        throw std::invalid_argument("EXTRACT source must be body, stdout or header:<Name>");
    }
    if (ex.pattern.empty()) {
        throw std::invalid_argument("EXTRACT regex must not be empty");
    }
    return ex;
}

} // namespace

Action parse_action(std::string_view text) {
    auto lines = split_lines(text);
    std::size_t base_indent = std::string_view::npos;
    for (const auto& l : lines) {
        auto ind = indent_of(l);
        if (ind < l.size() && directive_of(std::string_view(l).substr(ind))) {
            base_indent = ind;
            break;
        }
    }
    if (base_indent == std::string_view::npos) {
        throw std::invalid_argument("action has no REQUEST/RUN/WRITE directive");
    }

    Action action;
    std::optional<ActionKind> kind;
    std::string* continuation = nullptr;
    auto set_kind = [&](ActionKind k) {
        if (kind && *kind != k) {
            throw std::invalid_argument("action mixes REQUEST, RUN and WRITE directives");
        }
        if (kind) {
            throw std::invalid_argument("action has more than one " + std::string(to_string(k)) + " directive");
        }
        kind = k;
    };

    for (const auto& raw : lines) {
        std::string_view line = raw;
        auto ind = std::min(indent_of(line), base_indent);
        line.remove_prefix(ind);
        auto d = directive_of(line);
        if (!d) {
            if (continuation) {
                *continuation += "\n";
                *continuation += line;
            } else if (!trim(line).empty()) {
                throw std::invalid_argument("unexpected line in action: '" + std::string(line) + "'");
            }
            continue;
        }
        continuation = nullptr;
        auto value = line.substr(d->size());
        if (!value.empty() && value.front() == ' ') {
            value.remove_prefix(1);
        }
        if (*d == "REQUEST:") {
            set_kind(ActionKind::http);
            auto v = trim(value);
            auto sp = v.find(' ');
            if (sp == std::string::npos) {
                throw std::invalid_argument("REQUEST expects '<METHOD> <url>'");
            }
            action.method = v.substr(0, sp);
            action.url = trim(v.substr(sp + 1));
            if (!std::all_of(action.method.begin(), action.method.end(), [](unsigned char c) { return std::isupper(c); })) {
                throw std::invalid_argument("HTTP method must be upper-case: '" + action.method + "'");
            }
        } else if (*d == "HEADER:") {
            auto v = trim(value);
            auto colon = v.find(':');
            if (colon == std::string::npos || colon == 0) {
                throw std::invalid_argument("HEADER expects '<Name>: <value>'");
            }
            action.headers.emplace_back(trim(v.substr(0, colon)), trim(v.substr(colon + 1)));
        } else if (*d == "BODY:") {
            action.body = std::string(value);
            continuation = &action.body;
        } else if (*d == "RUN:") {
            set_kind(ActionKind::shell);
            action.command = std::string(value);
            continuation = &action.command;
        } else if (*d == "WRITE:") {
            set_kind(ActionKind::write_file);
            action.path = trim(value);
        } else if (*d == "CONTENT:") {
            action.content = std::string(value);
            continuation = &action.content;
        } else if (*d == "EXTRACT:") {
            action.extracts.push_back(parse_extraction(value));
        }
    }
    action.kind = *kind;
    switch (action.kind) {
    case ActionKind::http:
        if (action.url.empty()) {
            throw std::invalid_argument("REQUEST has no URL");
        }
        break;
    case ActionKind::shell:
        if (trim(action.command).empty()) {
            throw std::invalid_argument("RUN has an empty command");
        }
        break;
    case ActionKind::write_file:
        if (action.path.empty()) {
            throw std::invalid_argument("WRITE has no path");
        }
        break;
    }
    return action;
}

std::string render_action(const Action& a) {
    std::string out;
    switch (a.kind) {
    case ActionKind::http:
        out += "REQUEST: " + a.method + " " + a.url + "\n";
        for (const auto& [k, v] : a.headers) {
            out += "HEADER: " + k + ": " + v + "\n";
        }
        if (!a.body.empty()) {
            out += "BODY: " + a.body + "\n";
        }
        break;
    case ActionKind::shell:
        out += "RUN: " + a.command + "\n";
        break;
    case ActionKind::write_file:
        out += "WRITE: " + a.path + "\n";
        out += "CONTENT: " + a.content + "\n";
        break;
    }
    for (const auto& ex : a.extracts) {
        out += "EXTRACT: " + ex.name + " <- " + ex.source + " /" + ex.pattern + "/\n";
    }
    if (!out.empty()) {
        out.pop_back();
    }
    return out;
}

} // namespace vulnval
