#pragma once

#include <ostream>

namespace bb::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kTransportError = 3 };

/// Entry point of the blackbandit executable; also driven directly by tests.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bb::cli
