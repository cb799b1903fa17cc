#pragma once

#include <cmath>
#include <string>

#include "nbsto/core/constants.hpp"
#include "nbsto/core/errors.hpp"

namespace nbsto {

/// Trapping kinetics parameters of the interfacial dielectric.
///
/// `volume / h` is the effective trap capacity: the trapped density at which
/// Coulombic deactivation has reduced the capture rate by 1/e. It carries
/// units of 1/m^3 and is what the decay exponent depends on.
struct TrapParams {
  double n0_max = 1.0e25;      // 1/m^3, available traps
  double sigma = 1.0e-23;      // m^2, capture cross-section
  double h = 1.0e-40;          // deactivated volume per trapped electron
  double x_centroid = 3.45e-10; // m, centroid of trapped charge
  double v_th = 1.0e5;         // m/s
  double v_d = 1.0e3;          // m/s
  double volume = 2.0e-16;     // dielectric volume per zone
  double e0_scale = 1.0e8;     // V/m, conduction field scale E0
  double j0_ref = 1.0;         // A/m^2, conduction prefactor J0

  double capacity() const { return volume / h; }

  /// Injected charge density Q* at which trapping departs from linear.
  double q_star() const {
    return capacity() * v_d * constants::elementary_charge / (n0_max * v_th * sigma);
  }
};

struct MaterialParams {
  double eps_zero = 300.0;          // zero-field relative permittivity
  double eps_field_scale = 1.0e7;   // V/m, permittivity roll-off field
  double barrier_height = 0.65;     // eV
  double ideality = 1.5;
  double donor_density = 1.0e25;    // 1/m^3
  double richardson_const = 1.56e6; // A/(m^2 K^2)
  double temperature = 300.0;       // K
  double conduction_dos = 1.0e26;   // 1/m^3, effective density of states N_c
  TrapParams trap{};
};

/// Circular top electrode on a planar substrate, partitioned into a center
/// disc and an edge annulus of width `edge_zone_width`.
struct DeviceGeometry {
  double radius = 1.0e-6;               // m
  double substrate_thickness = 0.5e-3;  // m
  double edge_zone_width = 200.0e-9;    // m
  double electrode_coverage = 0.0;      // 1 means the electrode covers the whole top face

  double area() const { return constants::pi * radius * radius; }
  double perimeter() const { return 2.0 * constants::pi * radius; }
  double perimeter_to_area() const { return 2.0 / radius; }

  double center_area() const {
    const double rc = radius - edge_zone_width;
    return constants::pi * rc * rc;
  }
  double edge_area() const { return area() - center_area(); }
};

namespace detail {
inline void require(bool ok, const std::string& what) {
  if (!ok) throw parameter_error(what);
}
inline bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }
}  // namespace detail

inline void validate(const TrapParams& p) {
  using detail::positive_finite;
  using detail::require;
  require(positive_finite(p.n0_max), "trap: n0_max must be > 0");
  require(positive_finite(p.sigma), "trap: sigma must be > 0");
  require(positive_finite(p.h), "trap: h must be > 0");
  require(positive_finite(p.x_centroid), "trap: x_centroid must be > 0");
  require(positive_finite(p.v_th), "trap: v_th must be > 0");
  require(positive_finite(p.v_d), "trap: v_d must be > 0");
  require(positive_finite(p.volume), "trap: volume must be > 0");
  require(positive_finite(p.e0_scale), "trap: e0_scale must be > 0");
  require(std::isfinite(p.j0_ref) && p.j0_ref >= 0.0, "trap: j0_ref must be >= 0");
  require(p.h < p.volume, "trap: h must be much smaller than volume");
}

inline void validate(const MaterialParams& m) {
  using detail::positive_finite;
  using detail::require;
  require(std::isfinite(m.eps_zero) && m.eps_zero > 1.0, "material: eps_zero must be > 1");
  require(positive_finite(m.eps_field_scale), "material: eps_field_scale must be > 0");
  require(positive_finite(m.barrier_height), "material: barrier_height must be > 0");
  require(std::isfinite(m.ideality) && m.ideality >= 1.0, "material: ideality must be >= 1");
  require(positive_finite(m.donor_density), "material: donor_density must be > 0");
  require(positive_finite(m.richardson_const), "material: richardson_const must be > 0");
  require(positive_finite(m.temperature), "material: temperature must be > 0");
  require(positive_finite(m.conduction_dos), "material: conduction_dos must be > 0");
  validate(m.trap);
}

inline void validate(const DeviceGeometry& g) {
  using detail::positive_finite;
  using detail::require;
  require(positive_finite(g.radius), "geometry: radius must be > 0");
  require(positive_finite(g.substrate_thickness), "geometry: substrate_thickness must be > 0");
  require(positive_finite(g.edge_zone_width) && g.edge_zone_width < g.radius,
          "geometry: edge_zone_width must lie in (0, radius)");
  require(std::isfinite(g.electrode_coverage) && g.electrode_coverage >= 0.0 &&
              g.electrode_coverage <= 1.0,
          "geometry: electrode_coverage must lie in [0, 1]");
}

}  // namespace nbsto
