#pragma once

#include <iosfwd>

namespace implctl {

enum ExitCode : int {
    kExitOk = 0,
    kExitUnexpected = 1,
    kExitValidation = 2,
    kExitFault = 3,
};

/// Entry point of the `implctl` tool. Never throws; returns one of ExitCode.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace implctl
