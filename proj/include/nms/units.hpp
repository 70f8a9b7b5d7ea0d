#pragma once

#include <numbers>

namespace nms {

inline constexpr double kHbar = 1.054571817e-34;     // J s
inline constexpr double kBoltzmann = 1.380649e-23;   // J/K
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Internally every rate is angular (rad/s); files and flags speak Hz.
constexpr double hz_to_angular(double hz) { return kTwoPi * hz; }
constexpr double angular_to_hz(double omega) { return omega / kTwoPi; }

}  // namespace nms
