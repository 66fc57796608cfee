#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace spillfree {

/// Runs one CLI invocation (`argv[0]` is the program name) and returns the
/// process exit code: 0 on success, otherwise `exit_code(ErrorCode)`.
int cli_run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spillfree
