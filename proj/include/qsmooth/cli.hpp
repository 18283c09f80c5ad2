#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qsmooth {

inline constexpr int kExitOk = 0;
inline constexpr int kExitParameterError = 1;
inline constexpr int kExitStatisticsError = 2;

// Runs one command line (without the program name): analytic, simulate,
// sweep-chi, sweep-flux or compare. Returns the process exit status.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qsmooth
