#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace stvar::cli {

inline constexpr const char* kToolVersion = "0.3.0";

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kDataError = 2;
inline constexpr int kNumericalError = 3;

/// Runs one command line (argv[0] is the program name).
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, char** argv);

/// Runs the stages listed in a pipeline config file.
int pipeline(const std::filesystem::path& config, std::ostream& out, std::ostream& err);

}  // namespace stvar::cli
