#pragma once

namespace bcsprobe {

inline constexpr const char* version = "0.1.0";
inline constexpr const char* units_convention = "k_F = E_F = hbar = 1, m = 1/2";

}  // namespace bcsprobe
