#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vulnval {

enum ExitCode : int {
    kExitSuccess = 0,
    kExitNotConfirmed = 1,
    kExitUsage = 2,
    kExitInfra = 3,
};

/// Entry point of the vulnval command. `args` excludes the program name.
/// Subcommands: run, bench, metrics, poc-validate, poc-replay, fixture, annotate.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace vulnval
