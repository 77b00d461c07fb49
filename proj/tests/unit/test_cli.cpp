#include "doctest.h"
#include "support.hpp"

#include "vulnval/cli.hpp"
#include "vulnval/util.hpp"

#include <sstream>

using namespace vulnval;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code = -1;
    std::string out;
    std::string err;
};

CliRun cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    CliRun r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

bool has(const std::string& text, const std::string& needle) { return text.find(needle) != std::string::npos; }

} // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit 2 and help exits 0") {
    CHECK(cli({}).code == kExitUsage);
    CHECK(cli({"--help"}).code == kExitSuccess);
    CHECK(cli({"frobnicate"}).code == kExitUsage);
    CHECK(cli({"run"}).code == kExitUsage);
    auto missing = cli({"run", "--manifest", "/nonexistent/manifest.json", "--cassette", "x"});
    CHECK(missing.code == kExitUsage);
    CHECK(has(missing.err, "error:"));
    CHECK(cli({"metrics", "--records", vvtest::data_file("records_40x5.ndjson").string(), "--max-attempts", "0"}).code ==
          kExitUsage);
}

TEST_CASE("run exits 0 on a confirmed exploit and 1 when the budget runs out") {
    auto fixture = vvtest::start(FixtureName::regrole);
    vvtest::TempDir out;
    const auto manifest = fixture->manifest_path().string();
    auto ok = cli({"run", "--manifest", manifest, "--cassette", vvtest::cassette("regrole").string(), "--out",
                   out.path().string(), "--records", (out / "records.ndjson").string()});
    CHECK(ok.code == kExitSuccess);
    CHECK(has(ok.out, "exploit confirmed"));
    CHECK(has(ok.out, "tca 2"));
    const auto run_dir = out / (fixture->manifest().target_id + "/run-1");
    CHECK(fs::exists(run_dir / "poc.md"));
    CHECK(read_records(out / "records.ndjson").size() == 1);

    auto check = cli({"poc-validate", "--poc", (run_dir / "poc.json").string()});
    CHECK(check.code == kExitSuccess);
    CHECK(has(check.out, "trace_consistent  yes"));

    auto replay = cli({"poc-replay", "--poc", (run_dir / "poc.json").string(), "--manifest", manifest});
    CHECK(replay.code == kExitSuccess);
    CHECK(has(replay.out, "exploit reproduced"));

    auto never = cli({"run", "--manifest", manifest, "--cassette", vvtest::cassette("regrole_never").string(), "--out",
                      out.path().string(), "--run-index", "2", "--output", "json"});
    CHECK(never.code == kExitNotConfirmed);
    CHECK(has(never.out, "\"attempts_used\":5"));
}

TEST_CASE("run against a stopped target is an infrastructure failure") {
    auto fixture = vvtest::start(FixtureName::regrole);
    const auto manifest = fixture->manifest_path().string();
    fixture->stop();
    vvtest::TempDir out;
    auto r = cli({"run", "--manifest", manifest, "--cassette", vvtest::cassette("regrole").string(), "--out",
                  out.path().string()});
    CHECK(r.code == kExitInfra);
    auto nr = cli({"run", "--manifest", manifest, "--cassette", vvtest::cassette("regrole").string(), "--out",
                   out.path().string(), "--no-reset"});
    CHECK(nr.code == kExitInfra);
}

TEST_CASE("metrics over the record fixture") {
    const auto records = vvtest::data_file("records_40x5.ndjson").string();
    auto text = cli({"metrics", "--records", records});
    CHECK(text.code == kExitSuccess);
    CHECK(has(text.out, "SR         0.30"));
    CHECK(has(text.out, "AvgTCA     1.67"));
    CHECK(has(text.out, "targets    40 (12 exploited)"));
    auto json_out = cli({"metrics", "--records", records, "--output", "json"});
    CHECK(json_out.code == kExitSuccess);
    CHECK(has(json_out.out, "\"sr\""));
}

TEST_CASE("annotate add and report") {
    vvtest::TempDir dir;
    const auto records = vvtest::data_file("records_40x5.ndjson").string();
    const auto ann = (dir / "a.ndjson").string();
    auto add = cli({"annotate", "add", "--records", records, "--annotations", ann, "--target", "cve-40", "--run", "1",
                    "--agent", "strategist", "--primary", "control_loop_inefficiency", "--secondary",
                    "budget_exhaustion"});
    CHECK(add.code == kExitSuccess);
    auto succeeded = cli({"annotate", "add", "--records", records, "--annotations", ann, "--target", "cve-01", "--run",
                          "1", "--agent", "strategist", "--primary", "control_loop_inefficiency"});
    CHECK(succeeded.code == kExitUsage);
    auto illegal = cli({"annotate", "add", "--records", records, "--annotations", ann, "--target", "cve-39", "--run",
                        "1", "--agent", "strategist", "--primary", "control_loop_inefficiency", "--secondary",
                        "wrong_entrypoint"});
    CHECK(illegal.code == kExitUsage);

    auto report = cli({"annotate", "report", "--annotations", vvtest::data_file("annotations_25.ndjson").string()});
    CHECK(report.code == kExitSuccess);
    CHECK(has(report.out, "76"));
    CHECK(has(report.out, "60"));
}

TEST_CASE("fixture reset runs the manifest hook") {
    auto fixture = vvtest::start(FixtureName::toolexec);
    auto r = cli({"fixture", "reset", "--manifest", fixture->manifest_path().string()});
    CHECK(r.code == kExitSuccess);
    CHECK(has(r.out, "reset " + fixture->manifest().target_id));
}

}
