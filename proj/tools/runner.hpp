#pragma once

#include <ostream>

namespace spinglass::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

/// Entry point shared by the executable and the tests:
/// spinglass <command> --config <file> [--threads K] [--out DIR].
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace spinglass::cli
