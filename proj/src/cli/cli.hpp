#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace qrect::cli {

enum ExitCode : int {
  kOk = 0,
  kPropertyFailed = 1,
  kConfigError = 2,
  kNumericalFailure = 3,
};

/// Entry point of the `qrect` executable; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qrect::cli
