#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sim
{

enum ExitCode
{
    kSuccess = 0,
    kCheckFailed = 1,   // oracle-check above tolerance, I/O failures
    kConfigError = 2,
    kNumericalFailure = 3,
};

const std::vector<std::string>& command_names();

/// Runs one command end to end and returns the process exit code.
/// Diagnostics go to `err`, a short summary to `log`.
int run(const std::string& command, const std::string& config_path, const std::vector<std::string>& overrides,
        const std::string& out_dir, std::ostream& log, std::ostream& err);

}
