#include "vulnval/domain.hpp"
#include "vulnval/errors.hpp"
#include "vulnval/util.hpp"

#include "json_io.hpp"

namespace vulnval {

std::string serialize_run_record(const RunRecord& record) { return json(record).dump(); }

RunRecord parse_run_record(std::string_view line) {
    RunRecord r;
    try {
        r = json::parse(line).get<RunRecord>();
    } catch (const std::exception& e) {
        throw Error(std::string("malformed run record: ") + e.what());
    }
    try {
        validate_run_record(r);
    } catch (const std::invalid_argument& e) {
        throw Error(e.what());
    }
    return r;
}

std::vector<RunRecord> read_records(const std::filesystem::path& path) {
    std::vector<RunRecord> out;
    int line_no = 0;
    for (const auto& line : split_lines(read_file(path))) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        try {
            out.push_back(parse_run_record(line));
        } catch (const Error& e) {
            throw Error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

void append_record(const std::filesystem::path& path, const RunRecord& record) {
    append_line(path, serialize_run_record(record));
}

} // namespace vulnval
