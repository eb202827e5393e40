#pragma once

#include <numbers>

// Dimensionless Fermi units: k_F = 1 for wave vectors, E_F = 1 for energies,
// hbar = 1. Everything else follows from E_F = k_F^2 / 2m.
namespace bcsprobe::units {

inline constexpr double pi = std::numbers::pi;
inline constexpr double fermi_wavevector = 1.0;
inline constexpr double fermi_energy = 1.0;
inline constexpr double mass = fermi_wavevector * fermi_wavevector / (2.0 * fermi_energy);  // 1/2
inline constexpr double fermi_velocity = fermi_wavevector / mass;                          // 2
inline constexpr double density = 1.0 / (3.0 * pi * pi);                                    // k_F^3 / 3pi^2

// Free-particle kinetic energy k^2/2m.
constexpr double kinetic(double k) { return k * k / (2.0 * mass); }

}  // namespace bcsprobe::units
