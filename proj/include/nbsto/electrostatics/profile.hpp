#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "nbsto/core/errors.hpp"
#include "nbsto/core/params.hpp"
#include "nbsto/electrostatics/mesh.hpp"
#include "nbsto/electrostatics/solver.hpp"
#include "nbsto/permittivity.hpp"

namespace nbsto::electrostatics {

/// Normal field along r at a fixed depth below the interface.
struct FieldProfile {
  double radius = 0.0;        // m, electrode radius
  double depth = 0.0;         // m
  std::vector<double> r;      // m
  std::vector<double> e_z;    // V/m, signed
  double e_center = 0.0;      // V/m, |e_z| at r = 0
  double e_max = 0.0;         // V/m, max |e_z|
  double r_at_max = 0.0;      // m
  double enhancement = 1.0;   // e_max / e_center
};

/// Samples E_z at `depth` below the top face. Depths between mesh rows are
/// interpolated linearly between the row values.
inline FieldProfile interface_profile(const PotentialField& field, double depth) {
  const auto& z = field.mesh.z;
  const std::size_t nz = z.size();
  const double top = z.back();
  const double z_s = top - depth;
  if (!(depth > 0.0) || !(z_s > 0.0))
    throw parameter_error("interface_profile: depth must lie inside the substrate");
  if (depth < (top - z[nz - 2]) * (1.0 - 1e-9))
    throw parameter_error("interface_profile: depth must be at least one cell below the interface");

  std::size_t j_hi = static_cast<std::size_t>(std::lower_bound(z.begin(), z.end(), z_s) - z.begin());
  std::size_t j_lo = j_hi;
  double w = 0.0;
  if (std::abs(z[j_hi] - z_s) > 1e-9 * depth) {
    j_lo = j_hi - 1;
    w = (z_s - z[j_lo]) / (z[j_hi] - z[j_lo]);
  }

  FieldProfile p;
  p.radius = field.electrode_radius;
  p.depth = depth;
  p.r = field.mesh.r;
  p.e_z.resize(p.r.size());
  for (std::size_t i = 0; i < p.r.size(); ++i) {
    const double lo = field_z(field, i, j_lo);
    const double hi = j_lo == j_hi ? lo : field_z(field, i, j_hi);
    p.e_z[i] = (1.0 - w) * lo + w * hi;
  }
  p.e_center = std::abs(p.e_z.front());
  for (std::size_t i = 0; i < p.r.size(); ++i) {
    if (std::abs(p.e_z[i]) > p.e_max) {
      p.e_max = std::abs(p.e_z[i]);
      p.r_at_max = p.r[i];
    }
  }
  p.enhancement = p.e_center > 0.0 ? p.e_max / p.e_center : 1.0;
  return p;
}

/// Standardized sampling and meshing rule. The sampling depth is a fixed
/// fraction of the radius. Radii below `reference_radius` are solved on a
/// thinner substrate of fixed size whose mesh has a finite absolute
/// resolution, represented by the depth floor `small_min_depth`.
struct SamplingRule {
  double depth_fraction = 1.0 / 400.0;
  double reference_radius = 1.0e-6;
  double small_thickness = 5.0e-6;      // m, substrate used below the reference radius
  double small_min_depth = 20.0e-9;     // m
  double cells_per_depth = 16.0;        // uniform cells between interface and sampling row
  double growth = 1.12;
  double inner_cap_fraction = 0.05;     // largest spacing under the electrode / radius
  double domain_radius_factor = 3.0;
  SolveOptions solver{};

  bool small(double radius) const { return radius < reference_radius; }

  double depth(double radius) const {
    const double d = depth_fraction * radius;
    return small(radius) ? std::max(d, small_min_depth) : d;
  }

  /// Substrate thickness actually simulated for a radius.
  double thickness(double radius, double nominal) const {
    return small(radius) ? std::min(nominal, small_thickness) : nominal;
  }

  MeshSpec spec(const DeviceGeometry& g) const {
    const double d = depth(g.radius);
    MeshSpec s;
    s.radius = g.radius;
    s.thickness = thickness(g.radius, g.substrate_thickness);
    s.domain_radius = std::max(domain_radius_factor * g.radius, s.thickness);
    s.h = std::min(d / cells_per_depth, g.edge_zone_width / 6.0);
    s.r_band = std::max(2.0 * d, 6.0 * s.h);
    s.z_band = std::min(4.0 * d, 0.5 * s.thickness);
    s.growth = growth;
    s.h_cap_inner = std::max(s.h, inner_cap_fraction * g.radius);
    s.cluster_edge = g.electrode_coverage < 1.0;
    return s;
  }
};

/// Geometry used for a field study at `radius`; the edge zone is narrowed for
/// small electrodes so that it stays inside the disc.
inline DeviceGeometry study_geometry(double radius, double thickness = 0.5e-3) {
  DeviceGeometry g;
  g.radius = radius;
  g.substrate_thickness = thickness;
  g.edge_zone_width = std::min(200.0e-9, 0.2 * radius);
  return g;
}

/// Solve and sample one radius under the standardized rule.
inline FieldProfile standard_profile(const DeviceGeometry& g, const PermittivityModel& perm, double v_applied,
                                     const SamplingRule& rule = {}) {
  DeviceGeometry solved = g;
  solved.substrate_thickness = rule.thickness(g.radius, g.substrate_thickness);
  const AxisymMesh mesh = make_mesh(rule.spec(g));
  const PotentialField f = solve(solved, perm, v_applied, mesh, rule.solver);
  return interface_profile(f, rule.depth(g.radius));
}

/// Profiles for a list of radii sorted in descending order.
inline std::vector<FieldProfile> radius_study(const std::vector<double>& radii, const PermittivityModel& perm,
                                              double v_applied, const SamplingRule& rule = {},
                                              double thickness = 0.5e-3) {
  for (std::size_t k = 1; k < radii.size(); ++k)
    if (!(radii[k] <= radii[k - 1])) throw parameter_error("radius_study: radii must be sorted in descending order");
  std::vector<FieldProfile> out;
  out.reserve(radii.size());
  for (double a : radii) {
    try {
      out.push_back(standard_profile(study_geometry(a, thickness), perm, v_applied, rule));
    } catch (const numerical_error& e) {
      throw numerical_error(std::string(e.what()) + " (radius " + std::to_string(a) + " m)", e.history());
    } catch (const parameter_error& e) {
      throw parameter_error(std::string(e.what()) + " (radius " + std::to_string(a) + " m)");
    }
  }
  return out;
}

struct ConvergenceReport {
  std::vector<double> h;          // m, finest spacing per level
  std::vector<double> nodes;      // mesh size per level
  std::vector<double> e_center;   // V/m
  std::vector<double> e_max;      // V/m, at the sampling row of each level
  double observed_order = std::numeric_limits<double>::quiet_NaN();
  double e_center_extrapolated = 0.0;
  bool e_max_mesh_sensitive = false;  // e_max keeps growing with refinement (edge singularity)
};

/// Solves the same problem on successively refined meshes. Level k uses
/// 2^k times the base cells per sampling depth and a grading ratio whose
/// excess over 1 is halved each level.
inline ConvergenceReport grid_convergence(const DeviceGeometry& geom, const PermittivityModel& perm, double v_applied,
                                          int levels, const SamplingRule& base = {}, double base_cells = 2.0,
                                          double base_growth = 1.24) {
  if (levels < 3) throw parameter_error("grid_convergence: need at least 3 refinement levels");
  ConvergenceReport rep;
  for (int k = 0; k < levels; ++k) {
    SamplingRule rule = base;
    rule.cells_per_depth = base_cells * std::pow(2.0, k);
    rule.growth = 1.0 + (base_growth - 1.0) / std::pow(2.0, k);
    DeviceGeometry g = geom;
    g.substrate_thickness = rule.thickness(geom.radius, geom.substrate_thickness);
    const AxisymMesh mesh = make_mesh(rule.spec(geom));
    const PotentialField f = solve(g, perm, v_applied, mesh, rule.solver);
    const FieldProfile p = interface_profile(f, rule.depth(geom.radius));
    rep.h.push_back(rule.depth(geom.radius) / rule.cells_per_depth);
    rep.nodes.push_back(static_cast<double>(mesh.nodes()));
    rep.e_center.push_back(p.e_center);
    rep.e_max.push_back(p.e_max);
  }
  const std::size_t n = rep.e_center.size();
  const double e0 = rep.e_center[n - 3], e1 = rep.e_center[n - 2], e2 = rep.e_center[n - 1];
  const double d1 = e1 - e0, d2 = e2 - e1;
  rep.e_center_extrapolated = e2;
  if (std::abs(d2) > 1e-13 * std::abs(e2) && std::abs(d1) > 0.0 && d1 * d2 > 0.0) {
    rep.observed_order = std::log(std::abs(d1 / d2)) / std::log(2.0);
    const double ratio = std::pow(2.0, rep.observed_order);
    rep.e_center_extrapolated = e2 + d2 / (ratio - 1.0);
  }
  rep.e_max_mesh_sensitive = true;
  for (std::size_t k = 1; k < n; ++k)
    if (!(rep.e_max[k] > rep.e_max[k - 1])) rep.e_max_mesh_sensitive = false;
  return rep;
}

/// Edge-zone width implied by a profile: distance from the electrode edge
/// inward over which |e_z| stays above `factor` times the centre field.
inline double calibrate_edge_zone(const FieldProfile& p, double factor = 2.0) {
  if (p.r.empty() || !(p.e_center > 0.0)) throw parameter_error("calibrate_edge_zone: empty profile");
  const double threshold = factor * p.e_center;
  std::size_t i_edge = 0;
  for (std::size_t i = 0; i < p.r.size(); ++i)
    if (p.r[i] <= p.radius * (1.0 + 1e-12)) i_edge = i;
  if (!(std::abs(p.e_z[i_edge]) > threshold)) return 0.0;
  std::size_t i = i_edge;
  while (i > 0 && std::abs(p.e_z[i - 1]) > threshold) --i;
  return p.radius - p.r[i];
}

}  // namespace nbsto::electrostatics
