#ifndef ADLC_TOOLS_CLI_H_
#define ADLC_TOOLS_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace adlc::cli {

enum ExitCode { kOk = 0, kProgramError = 1, kCheckFailed = 2 };

// Runs one command line (without the program name) and returns the exit
// code. Results go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace adlc::cli

#endif  // ADLC_TOOLS_CLI_H_
