#pragma once

namespace escape_lab {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kFormatVersion = 1;

}  // namespace escape_lab
