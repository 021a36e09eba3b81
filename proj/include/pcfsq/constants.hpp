#pragma once

namespace pcfsq {

// CODATA / SI exact values
inline constexpr double kHbar = 1.054571817e-34;  // J s
inline constexpr double kSpeedOfLight = 2.99792458e8;  // m/s
inline constexpr double kBoltzmann = 1.380649e-23;  // J/K
inline constexpr double kPi = 3.14159265358979323846;

}  // namespace pcfsq
