#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "nbsto/core/errors.hpp"
#include "nbsto/core/params.hpp"
#include "nbsto/electrostatics/mesh.hpp"
#include "nbsto/permittivity.hpp"

namespace nbsto::electrostatics {

struct SolveOptions {
  double tol = 1e-9;              // V, max Picard update at convergence
  double damping = 0.5;
  int max_iterations = 200;
};

/// Potential on the mesh nodes, stored row by row (index j * nr + i).
struct PotentialField {
  AxisymMesh mesh;
  std::vector<double> phi;
  double v_applied = 0.0;
  double electrode_radius = 0.0;
  bool full_coverage = false;
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;                  // V, last Picard update
  std::vector<double> residual_history;   // V, one entry per iteration
  double electrode_flux = 0.0;            // eps_r V m, per radian
  double ground_flux = 0.0;

  double at(std::size_t i, std::size_t j) const { return phi[j * mesh.nr() + i]; }

  /// |electrode + ground| / |electrode|; zero for exact conservation.
  double flux_imbalance() const {
    return std::abs(electrode_flux + ground_flux) / std::max(std::abs(electrode_flux), 1e-300);
  }
};

namespace detail {

inline bool is_electrode(const AxisymMesh& m, std::size_t i, std::size_t j, double radius, bool full) {
  return j + 1 == m.nz() && (full || m.r[i] <= radius * (1.0 + 1e-12));
}

/// Per-cell |grad phi| from the four corner values.
inline std::vector<double> cell_field(const AxisymMesh& m, const std::vector<double>& phi) {
  const std::size_t nr = m.nr(), nz = m.nz();
  std::vector<double> e((nr - 1) * (nz - 1));
  for (std::size_t j = 0; j + 1 < nz; ++j) {
    const double dz = m.z[j + 1] - m.z[j];
    for (std::size_t i = 0; i + 1 < nr; ++i) {
      const double dr = m.r[i + 1] - m.r[i];
      const double p00 = phi[j * nr + i], p10 = phi[j * nr + i + 1];
      const double p01 = phi[(j + 1) * nr + i], p11 = phi[(j + 1) * nr + i + 1];
      const double er = 0.5 * ((p10 + p11) - (p00 + p01)) / dr;
      const double ez = 0.5 * ((p01 + p11) - (p00 + p10)) / dz;
      e[j * (nr - 1) + i] = std::hypot(er, ez);
    }
  }
  return e;
}

struct Coupling {
  std::size_t a, b;
  double c;
};

/// Face couplings of the vertex-centred finite-volume scheme. Each cell
/// contributes half of its radial and axial faces; areas carry the r
/// weight of the axisymmetric divergence (the common 2 pi is dropped).
inline std::vector<Coupling> couplings(const AxisymMesh& m, const std::vector<double>& eps_cell) {
  const std::size_t nr = m.nr(), nz = m.nz();
  std::vector<Coupling> out;
  out.reserve(4 * (nr - 1) * (nz - 1));
  for (std::size_t j = 0; j + 1 < nz; ++j) {
    const double dz = m.z[j + 1] - m.z[j];
    for (std::size_t i = 0; i + 1 < nr; ++i) {
      const double eps_c = eps_cell[j * (nr - 1) + i];
      const double r0 = m.r[i], r1 = m.r[i + 1], dr = r1 - r0, rm = 0.5 * (r0 + r1);
      const double cr = eps_c * rm * 0.5 * dz / dr;
      const double cz_left = eps_c * 0.5 * (rm * rm - r0 * r0) / dz;
      const double cz_right = eps_c * 0.5 * (r1 * r1 - rm * rm) / dz;
      const std::size_t n00 = j * nr + i, n10 = n00 + 1, n01 = n00 + nr, n11 = n01 + 1;
      out.push_back({n00, n10, cr});
      out.push_back({n01, n11, cr});
      out.push_back({n00, n01, cz_left});
      out.push_back({n10, n11, cz_right});
    }
  }
  return out;
}

}  // namespace detail

/// Edge resolution check: at least four cells across the edge zone.
inline void check_edge_resolution(const AxisymMesh& m, const DeviceGeometry& geom) {
  if (geom.electrode_coverage >= 1.0) return;
  const double lo = geom.radius - geom.edge_zone_width;
  std::size_t count = 0;
  for (double r : m.r)
    if (r >= lo * (1.0 - 1e-12) && r <= geom.radius * (1.0 + 1e-12)) ++count;
  if (count < 5) throw parameter_error("solve: mesh too coarse near the electrode edge (< 4 cells across edge zone)");
  const bool on_node = std::any_of(m.r.begin(), m.r.end(),
                                   [&](double r) { return std::abs(r - geom.radius) <= 1e-9 * geom.radius; });
  if (!on_node) throw parameter_error("solve: electrode edge must coincide with a mesh node");
}

/// Solves div(eps(|grad phi|) grad phi) = 0 on the axisymmetric substrate
/// with phi = v_applied on the electrode, phi = 0 on the ground plane and
/// zero normal flux elsewhere. Nonlinear permittivity is handled by damped
/// Picard iteration.
inline PotentialField solve(const DeviceGeometry& geom, const PermittivityModel& perm, double v_applied,
                            const AxisymMesh& mesh, const SolveOptions& opt = {}) {
  validate(mesh);
  if (!(opt.tol > 0.0)) throw parameter_error("solve: tol must be > 0");
  if (!std::isfinite(v_applied)) throw parameter_error("solve: v_applied must be finite");
  const bool full = geom.electrode_coverage >= 1.0;
  if (!full) {
    if (!(mesh.domain_radius() >= 3.0 * geom.radius * (1.0 - 1e-12)))
      throw parameter_error("solve: domain radius must be >= 3 electrode radii");
    check_edge_resolution(mesh, geom);
  }

  const std::size_t nr = mesh.nr(), nz = mesh.nz(), n = mesh.nodes();
  std::vector<double> fixed(n, std::nan(""));
  for (std::size_t i = 0; i < nr; ++i) {
    fixed[i] = 0.0;
    if (detail::is_electrode(mesh, i, nz - 1, geom.radius, full)) fixed[(nz - 1) * nr + i] = v_applied;
  }
  std::vector<long> unknown(n, -1);
  long n_free = 0;
  for (std::size_t k = 0; k < n; ++k)
    if (std::isnan(fixed[k])) unknown[k] = n_free++;

  PotentialField out;
  out.mesh = mesh;
  out.v_applied = v_applied;
  out.electrode_radius = geom.radius;
  out.full_coverage = full;
  out.phi.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k)
    if (!std::isnan(fixed[k])) out.phi[k] = fixed[k];

  using detail::Coupling;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  bool analyzed = false;
  std::vector<double> eps_cell((nr - 1) * (nz - 1), perm.eps_zero);

  auto linear_solve = [&](const std::vector<Coupling>& cs) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(3 * cs.size());
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n_free);
    for (const auto& c : cs) {
      const long ua = unknown[c.a], ub = unknown[c.b];
      if (ua >= 0) {
        trip.emplace_back(ua, ua, c.c);
        if (ub >= 0) trip.emplace_back(ua, ub, -c.c);
        else b[ua] += c.c * fixed[c.b];
      }
      if (ub >= 0) {
        trip.emplace_back(ub, ub, c.c);
        if (ua >= 0) trip.emplace_back(ub, ua, -c.c);
        else b[ub] += c.c * fixed[c.a];
      }
    }
    Eigen::SparseMatrix<double> a(n_free, n_free);
    a.setFromTriplets(trip.begin(), trip.end());
    if (!analyzed) {
      ldlt.analyzePattern(a);
      analyzed = true;
    }
    ldlt.factorize(a);
    if (ldlt.info() != Eigen::Success) throw numerical_error("solve: sparse factorization failed", out.residual_history);
    Eigen::VectorXd x = ldlt.solve(b);
    std::vector<double> phi(out.phi);
    for (std::size_t k = 0; k < n; ++k)
      if (unknown[k] >= 0) phi[k] = x[unknown[k]];
    return phi;
  };

  std::vector<Coupling> cs = detail::couplings(mesh, eps_cell);
  out.phi = linear_solve(cs);
  out.iterations = 1;
  out.residual = 0.0;
  out.residual_history.push_back(std::abs(v_applied));

  if (!perm.is_constant()) {
    bool done = false;
    for (int it = 1; it <= opt.max_iterations; ++it) {
      const std::vector<double> e = detail::cell_field(mesh, out.phi);
      for (std::size_t c = 0; c < e.size(); ++c) eps_cell[c] = eps(perm, e[c]);
      cs = detail::couplings(mesh, eps_cell);
      const std::vector<double> target = linear_solve(cs);
      double update = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double next = out.phi[k] + opt.damping * (target[k] - out.phi[k]);
        update = std::max(update, std::abs(next - out.phi[k]));
        out.phi[k] = next;
      }
      out.iterations = it + 1;
      out.residual = update;
      out.residual_history.push_back(update);
      if (!std::isfinite(update))
        throw numerical_error("solve: Picard iteration diverged", out.residual_history);
      if (update < opt.tol) {
        done = true;
        break;
      }
    }
    if (!done)
      throw numerical_error("solve: Picard iteration did not converge in " + std::to_string(opt.max_iterations) +
                                " iterations",
                            out.residual_history);
  }
  out.converged = true;

  // reaction fluxes through the Dirichlet boundaries
  for (const auto& c : cs) {
    const double flow = c.c * (out.phi[c.a] - out.phi[c.b]);
    auto credit = [&](std::size_t node, double f) {
      if (unknown[node] >= 0) return;
      if (node < nr) out.ground_flux += f;
      else out.electrode_flux += f;
    };
    credit(c.a, flow);
    credit(c.b, -flow);
  }
  return out;
}

/// Normal field E_z = -d(phi)/dz at node (i, j) by the three-point
/// difference on a non-uniform grid (one-sided at the boundaries).
inline double field_z(const PotentialField& f, std::size_t i, std::size_t j) {
  const auto& z = f.mesh.z;
  const std::size_t nz = z.size();
  if (j == 0) return -(f.at(i, 1) - f.at(i, 0)) / (z[1] - z[0]);
  if (j + 1 == nz) return -(f.at(i, nz - 1) - f.at(i, nz - 2)) / (z[nz - 1] - z[nz - 2]);
  const double h1 = z[j] - z[j - 1], h2 = z[j + 1] - z[j];
  const double d = (h1 * h1 * f.at(i, j + 1) - h2 * h2 * f.at(i, j - 1) - (h1 * h1 - h2 * h2) * f.at(i, j)) /
                   (h1 * h2 * (h1 + h2));
  return -d;
}

}  // namespace nbsto::electrostatics
