#include "vulnval/domain.hpp"
#include "vulnval/errors.hpp"
#include "vulnval/util.hpp"

#include "json_io.hpp"

namespace vulnval {

namespace fs = std::filesystem;

const TraceEvent& ExecutionTrace::append(TraceKind kind, std::string body, std::optional<int> exit_code) {
    TraceEvent e;
    e.seq = events.empty() ? 1 : events.back().seq + 1;
    e.timestamp = now_iso8601();
    e.kind = kind;
    e.body = std::move(body);
    e.exit_code = exit_code;
    events.push_back(std::move(e));
    return events.back();
}

std::size_t ExecutionTrace::interaction_count() const {
    std::size_t n = 0;
    for (const auto& e : events) {
        if (e.kind == TraceKind::command || e.kind == TraceKind::http_request) {
            ++n;
        }
    }
    return n;
}

std::optional<std::string> check_trace(const ExecutionTrace& trace) {
    std::optional<TraceKind> open;     // interaction awaiting its output
    bool open_answered = true;
    std::int64_t last_seq = 0;
    bool first = true;
    for (const auto& e : trace.events) {
        if (!first && e.seq <= last_seq) {
            return "seq not strictly increasing at seq " + std::to_string(e.seq);
        }
        first = false;
        last_seq = e.seq;
        switch (e.kind) {
        case TraceKind::command:
        case TraceKind::http_request:
            if (open && !open_answered) {
                return "interaction before seq " + std::to_string(e.seq) + " has no output events";
            }
            open = e.kind;
            open_answered = false;
            break;
        case TraceKind::stdout_text:
        case TraceKind::stderr_text:
            if (open != TraceKind::command) {
                return "output event at seq " + std::to_string(e.seq) + " does not follow a command";
            }
            open_answered = true;
            break;
        case TraceKind::http_response:
            if (open != TraceKind::http_request) {
                return "http_response at seq " + std::to_string(e.seq) + " does not follow an http_request";
            }
            open_answered = true;
            break;
        case TraceKind::note:
            // transport failures are recorded as a note in place of a response
            if (open == TraceKind::http_request && !open_answered) {
                open_answered = true;
            }
            break;
        }
    }
    if (open && !open_answered) {
        return "final interaction has no output events";
    }
    return std::nullopt;
}

std::string serialize_trace_ndjson(const ExecutionTrace& trace) {
    std::string out;
    for (const auto& e : trace.events) {
        out += json(e).dump();
        out += '\n';
    }
    return out;
}

ExecutionTrace parse_trace_ndjson(std::string_view text, std::string run_id) {
    ExecutionTrace trace;
    trace.run_id = std::move(run_id);
    int line_no = 0;
    for (const auto& line : split_lines(text)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        try {
            trace.events.push_back(json::parse(line).get<TraceEvent>());
        } catch (const std::exception& e) {
            throw Error("trace line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return trace;
}

void write_trace(const ExecutionTrace& trace, const fs::path& path) {
    write_file_atomic(path, serialize_trace_ndjson(trace));
}

ExecutionTrace read_trace(const fs::path& path) {
    return parse_trace_ndjson(read_file(path), path.stem().string());
}

} // namespace vulnval
