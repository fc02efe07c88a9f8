#pragma once

#include <ostream>

namespace permlab::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kInvalid = 2;
inline constexpr int kNotConverged = 3;

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace permlab::cli
