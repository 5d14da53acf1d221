#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mvom/config.hpp"
#include "mvom/drift.hpp"
#include "mvom/path.hpp"

namespace mvom::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Exit codes of run().
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNotConverged = 2;

/// Entry point of the command-line tool; args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

DriftSpec drift_from_config(const Config& config);

/// Reference path from a config value: "poly c0 c1 ...", "exp a r",
/// "csv <file>" or "linear" (x0 to x1). Coordinates are separated by ';'.
Path path_from_config(const Config& config, const std::string& key, int dim, int intervals);

}  // namespace mvom::cli
