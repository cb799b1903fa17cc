#pragma once

// CODATA 2018 values, SI units.
namespace nbsto::constants {

inline constexpr double elementary_charge = 1.602176634e-19;  // C
inline constexpr double boltzmann = 1.380649e-23;             // J/K
inline constexpr double vacuum_permittivity = 8.8541878128e-12;  // F/m
inline constexpr double electron_mass = 9.1093837015e-31;     // kg
inline constexpr double hbar = 1.054571817e-34;               // J s
inline constexpr double pi = 3.14159265358979323846;

/// Thermal voltage kT/q in volts.
inline constexpr double thermal_voltage(double temperature_k) {
  return boltzmann * temperature_k / elementary_charge;
}

/// Electron-volts to joules; the only place energies cross the eV boundary.
inline constexpr double ev_to_joule(double ev) { return ev * elementary_charge; }

}  // namespace nbsto::constants
