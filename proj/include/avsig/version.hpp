#pragma once

namespace avsig {

inline constexpr const char* kVersion = "0.1.0";

} // namespace avsig
