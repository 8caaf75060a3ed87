#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace limitset::cli {

enum ExitCode : int { ok = 0, input_error = 1, usage_error = 2, verdict_fail = 3, verdict_inconclusive = 4 };

/// Runs one command line (without the program name). Reports go to `out`
/// only when the command succeeds in producing one; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace limitset::cli
