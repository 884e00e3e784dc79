#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace adafam {

// Environment variable naming the default output directory for `run` and
// `sweep-mu`; falls back to ./results.
inline constexpr const char* kOutDirEnv = "ADAFAMILY_OUT_DIR";

// Entry point of the adafam tool. args[0] is the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace adafam
