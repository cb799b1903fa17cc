#pragma once

#include <cmath>
#include <span>
#include <string>
#include <string_view>

#include "nbsto/core/constants.hpp"
#include "nbsto/core/errors.hpp"
#include "nbsto/core/params.hpp"

namespace nbsto {

enum class Mechanism { exponential, frenkel_poole, fowler_nordheim };

inline std::string_view to_string(Mechanism m) {
  switch (m) {
    case Mechanism::exponential: return "exponential";
    case Mechanism::frenkel_poole: return "frenkel_poole";
    case Mechanism::fowler_nordheim: return "fowler_nordheim";
  }
  return "unknown";
}

inline Mechanism mechanism_from_string(std::string_view s) {
  if (s == "exponential") return Mechanism::exponential;
  if (s == "frenkel_poole") return Mechanism::frenkel_poole;
  if (s == "fowler_nordheim") return Mechanism::fowler_nordheim;
  throw parameter_error("unknown conduction mechanism '" + std::string(s) + "'");
}

/// Power-law-modulated conduction law. Voltages in the polynomial prefactors
/// are taken in units of 1 V, so `j_ref` carries all of the units.
struct ConductionLaw {
  Mechanism mechanism = Mechanism::exponential;
  double v0 = 0.5;      // V
  double j_ref = 1.0;   // A/m^2
};

/// Fowler-Nordheim is only evaluated above this bias.
inline constexpr double fowler_nordheim_min_bias = 0.05;  // V

/// Prefactor J_s of J = J_s (t/t0)^(-1/(alpha+1)) for the given mechanism.
inline double j_s(const ConductionLaw& law, double v, double alpha) {
  if (!(law.v0 > 0.0)) throw parameter_error("j_s: v0 must be > 0");
  if (!(alpha >= 0.0 && alpha < 1.0)) throw parameter_error("j_s: alpha must lie in [0, 1)");
  const double f = 1.0 - 1.0 / (alpha + 1.0);
  switch (law.mechanism) {
    case Mechanism::exponential:
      return law.j_ref * std::exp(f * v / law.v0);
    case Mechanism::frenkel_poole:
      if (!(v > 0.0)) throw domain_error("j_s: Frenkel-Poole needs V > 0");
      return law.j_ref * v * std::exp(f * std::sqrt(v) / law.v0);
    case Mechanism::fowler_nordheim:
      if (!(v > fowler_nordheim_min_bias))
        throw domain_error("j_s: Fowler-Nordheim needs V > 0.05 V");
      return law.j_ref * v * v * std::exp(f / (v * law.v0));
  }
  return 0.0;
}

/// Thermionic emission with ideality factor; J(0) = 0 and sign(J) = sign(V).
inline double thermionic(const MaterialParams& mat, double v) {
  const double vt = constants::thermal_voltage(mat.temperature);
  const double t2 = mat.temperature * mat.temperature;
  return mat.richardson_const * t2 * std::exp(-mat.barrier_height / vt) *
         std::expm1(v / (mat.ideality * vt));
}

/// Smallest effective barrier used by the WKB factor, eV.
inline constexpr double min_effective_barrier = 0.01;

/// WKB transmission exp(-2 w sqrt(2 m q phi_eff) / hbar) through a
/// rectangular barrier of width w, with phi_eff = max(phi_B - gamma |V|, 0.01 eV).
inline double tunneling_factor(const MaterialParams& mat, double w, double v, double gamma = 0.5) {
  if (!(w >= 0.0) || !std::isfinite(w)) throw parameter_error("tunneling_factor: w must be >= 0");
  const double phi = std::max(mat.barrier_height - gamma * std::abs(v), min_effective_barrier);
  const double kappa = std::sqrt(2.0 * constants::electron_mass * constants::ev_to_joule(phi)) / constants::hbar;
  return std::exp(-2.0 * w * kappa);
}

struct ZoneFlux {
  double area;  // m^2
  double j;     // A/m^2
};

inline double zone_current(std::span<const ZoneFlux> zones) {
  double total = 0.0;
  for (const auto& z : zones) {
    if (!(z.area >= 0.0)) throw parameter_error("zone_current: areas must be >= 0");
    total += z.area * z.j;
  }
  return total;
}

}  // namespace nbsto
