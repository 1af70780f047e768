#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace plodd::cli {

enum ExitCode : int {
  kOk = 0,
  kIoError = 1,
  kUsage = 2,
  kConvergence = 3,
  kDivergent = 4,
};

/// Runs one `plodd` invocation; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// lo:hi:step, lo:hi (unit step), a single value or a comma list.
std::vector<double> parse_real_range(const std::string& text);
std::vector<int> parse_int_range(const std::string& text);

}  // namespace plodd::cli
