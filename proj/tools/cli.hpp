#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mfdeg::cli {

enum ExitCode : int {
  kOk = 0,
  kInput = 2,
  kNonConvergence = 3,
  kBlowUp = 4,
  kResolution = 5,
};

/// Runs one command. args excludes the program name. Results go to out,
/// the resolved config and diagnostics to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mfdeg::cli
