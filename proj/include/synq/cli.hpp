#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace synq {

/// Exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitModelError = 1,  // model, validation, configuration or usage error
    kExitNumeric = 2,     // NearPole, BracketOverflow, InfiniteMean
    kExitVerify = 3,      // a verification check failed
};

/// Runs the tool; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace synq
