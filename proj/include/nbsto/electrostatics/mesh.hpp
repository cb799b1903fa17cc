#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "nbsto/core/errors.hpp"

namespace nbsto::electrostatics {

/// Graded tensor-product mesh in (r, z). The substrate occupies
/// z in [0, thickness]; the electrode sits on the top face z = thickness.
struct AxisymMesh {
  std::vector<double> r;  // m, r.front() == 0
  std::vector<double> z;  // m, z.front() == 0, z.back() == thickness

  std::size_t nr() const { return r.size(); }
  std::size_t nz() const { return z.size(); }
  std::size_t nodes() const { return r.size() * z.size(); }
  double domain_radius() const { return r.back(); }
  double thickness() const { return z.back(); }
};

/// Spacing layout of a graded mesh. `h` is the uniform spacing used in a
/// band of half-width `r_band` around the electrode edge and in a layer of
/// depth `z_band` below the top face; spacing grows by `growth` away from them.
struct MeshSpec {
  double radius = 1.0e-6;
  double thickness = 0.5e-3;
  double domain_radius = 0.5e-3;
  double h = 1.0e-9;
  double r_band = 10.0e-9;
  double z_band = 20.0e-9;
  double growth = 1.12;
  double h_cap_inner = 50.0e-9;  // largest spacing under the electrode
  bool cluster_edge = true;      // false for full-coverage electrodes
};

namespace detail {

/// Nodes from `from` toward `to` starting with spacing `h0` and growing by
/// `growth` up to `h_cap`. A short final interval is merged into the
/// previous one. Excludes `from`, includes `to`.
inline std::vector<double> graded_run(double from, double to, double h0, double growth, double h_cap) {
  std::vector<double> out;
  const double dir = to > from ? 1.0 : -1.0;
  const double length = std::abs(to - from);
  double pos = 0.0, h = h0;
  while (pos + h < length) {
    pos += h;
    out.push_back(from + dir * pos);
    h = std::min(h * growth, h_cap);
  }
  if (!out.empty() && length - pos < 0.3 * h) out.pop_back();
  out.push_back(to);
  return out;
}

inline std::vector<double> uniform_run(double from, double to, double h) {
  const auto n = static_cast<std::size_t>(std::max(1.0, std::round(std::abs(to - from) / h)));
  std::vector<double> out;
  for (std::size_t k = 1; k <= n; ++k)
    out.push_back(from + (to - from) * static_cast<double>(k) / static_cast<double>(n));
  return out;
}

}  // namespace detail

inline AxisymMesh make_mesh(const MeshSpec& s) {
  if (!(s.radius > 0.0) || !(s.thickness > 0.0) || !(s.domain_radius > s.radius))
    throw parameter_error("make_mesh: need 0 < radius < domain_radius and thickness > 0");
  if (!(s.h > 0.0) || !(s.growth >= 1.0) || !(s.z_band >= s.h) || !(s.z_band < s.thickness))
    throw parameter_error("make_mesh: invalid spacing parameters");

  AxisymMesh m;
  m.r.push_back(0.0);
  if (s.cluster_edge) {
    const double band = std::min({s.r_band, 0.5 * s.radius, 0.5 * (s.domain_radius - s.radius)});
    if (!(band >= s.h)) throw parameter_error("make_mesh: edge band narrower than one cell");
    const double a_in = s.radius - band, a_out = s.radius + band;
    const std::vector<double> inner =
        detail::graded_run(a_in, 0.0, s.h * s.growth, s.growth, std::max(s.h, s.h_cap_inner));
    for (auto it = inner.rbegin() + 1; it != inner.rend(); ++it) m.r.push_back(*it);
    m.r.push_back(a_in);
    for (double x : detail::uniform_run(a_in, s.radius, s.h)) m.r.push_back(x);
    m.r.back() = s.radius;
    for (double x : detail::uniform_run(s.radius, a_out, s.h)) m.r.push_back(x);
    const double h_cap_outer = std::max(s.h, 0.05 * s.domain_radius);
    for (double x : detail::graded_run(a_out, s.domain_radius, s.h * s.growth, s.growth, h_cap_outer))
      m.r.push_back(x);
  } else {
    const double h_cap = std::max(s.h, 0.05 * s.domain_radius);
    for (double x : detail::graded_run(0.0, s.domain_radius, std::max(s.h, s.h_cap_inner), s.growth, h_cap))
      m.r.push_back(x);
  }

  const double z_top = s.thickness - s.z_band;
  const std::vector<double> lower =
      detail::graded_run(z_top, 0.0, s.h * s.growth, s.growth, std::max(s.h, 0.05 * s.thickness));
  m.z.push_back(0.0);
  for (auto it = lower.rbegin() + 1; it != lower.rend(); ++it) m.z.push_back(*it);
  m.z.push_back(z_top);
  for (double x : detail::uniform_run(z_top, s.thickness, s.h)) m.z.push_back(x);
  m.z.back() = s.thickness;
  return m;
}

/// Uniform mesh, used for parallel-plate controls and tests.
inline AxisymMesh make_uniform_mesh(double domain_radius, double thickness, std::size_t nr, std::size_t nz) {
  if (nr < 2 || nz < 2) throw parameter_error("make_uniform_mesh: need at least 2 nodes per axis");
  AxisymMesh m;
  for (std::size_t i = 0; i < nr; ++i) m.r.push_back(domain_radius * static_cast<double>(i) / static_cast<double>(nr - 1));
  for (std::size_t j = 0; j < nz; ++j) m.z.push_back(thickness * static_cast<double>(j) / static_cast<double>(nz - 1));
  return m;
}

inline void validate(const AxisymMesh& m) {
  if (m.nr() < 2 || m.nz() < 2) throw parameter_error("mesh: need at least 2 nodes per axis");
  if (m.r.front() != 0.0 || m.z.front() != 0.0) throw parameter_error("mesh: must start at r = 0 and z = 0");
  for (std::size_t i = 1; i < m.nr(); ++i)
    if (!(m.r[i] > m.r[i - 1])) throw parameter_error("mesh: r nodes must be strictly increasing");
  for (std::size_t j = 1; j < m.nz(); ++j)
    if (!(m.z[j] > m.z[j - 1])) throw parameter_error("mesh: z nodes must be strictly increasing");
}

}  // namespace nbsto::electrostatics
