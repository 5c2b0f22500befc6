#pragma once

namespace latcor {

inline constexpr const char* version = "0.1.0";

} // namespace latcor
