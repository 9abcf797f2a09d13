#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dirac_forge {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kReportSchema = "dirac-forge-report/1";

// args excludes the program name; exit 0 = all checks pass, 1 = a check failed, 2 = structural or IO error
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace dirac_forge
