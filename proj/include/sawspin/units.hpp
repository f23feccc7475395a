#pragma once

// Internal unit system: time in microseconds, angular frequency in rad/us,
// hbar = 1. An ordinary frequency of f MHz is the angular rate 2*pi*f rad/us.
// The device calculator (device.hpp) works in SI.

#include <numbers>

namespace sawspin::units {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// MHz -> rad/us
constexpr double mhz(double f_mhz) { return two_pi * f_mhz; }

/// rad/us -> MHz
constexpr double to_mhz(double omega) { return omega / two_pi; }

/// kHz -> rad/us
constexpr double khz(double f_khz) { return two_pi * f_khz * 1e-3; }

namespace si {
inline constexpr double hbar = 1.054571817e-34;          // J s
inline constexpr double electron_volt = 1.602176634e-19;  // J
}  // namespace si

}  // namespace sawspin::units
