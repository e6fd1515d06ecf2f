#pragma once

#include <iosfwd>

namespace polyfactor {

/// Entry point of the command-line tool. Returns the process exit code:
/// 0 success, 1 runtime failure, 2 usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace polyfactor
