#pragma once

#include <numbers>

namespace ercav::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double speed_of_light = 299'792'458.0;     // m/s
inline constexpr double planck_reduced = 1.054571817e-34;   // J s
inline constexpr double fwhm_per_sigma = 2.3548200450309493; // 2 sqrt(2 ln 2)

}  // namespace ercav::constants
