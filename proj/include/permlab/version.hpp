#pragma once

namespace permlab {
inline constexpr const char* kVersion = "0.1.0";
}
