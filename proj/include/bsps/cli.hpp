#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bsps::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 2,
    kData = 3,
    kSolverWarning = 4,
};

/// Entry point for the command-line tool. argv[0] is the program name.
int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

/// Resolves "15" or "0.3n" against the sample size.
int resolve_count(const std::string& token, long n);

std::vector<int> resolve_count_list(const std::string& list, long n);

}  // namespace bsps::cli
