#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "nbsto/electrostatics/mesh.hpp"
#include "nbsto/electrostatics/profile.hpp"
#include "nbsto/electrostatics/solver.hpp"

using namespace nbsto;
using namespace nbsto::electrostatics;

namespace {

const PermittivityModel eps300 = PermittivityModel::constant(300.0);

DeviceGeometry plate() {
  DeviceGeometry g;
  g.radius = 1e-4;
  g.substrate_thickness = 0.5e-3;
  g.electrode_coverage = 1.0;
  return g;
}

PotentialField disc_field(double radius, double v, const PermittivityModel& perm = eps300, SamplingRule rule = {}) {
  const DeviceGeometry g = study_geometry(radius);
  DeviceGeometry solved = g;
  solved.substrate_thickness = rule.thickness(radius, g.substrate_thickness);
  return solve(solved, perm, v, make_mesh(rule.spec(g)), rule.solver);
}

}  // namespace

TEST(Mesh, GradedMeshPutsNodeOnEdge) {
  SamplingRule rule;
  const DeviceGeometry g = study_geometry(1e-6);
  const AxisymMesh m = make_mesh(rule.spec(g));
  EXPECT_NO_THROW(validate(m));
  EXPECT_TRUE(std::any_of(m.r.begin(), m.r.end(), [](double r) { return std::abs(r - 1e-6) < 1e-18; }));
  EXPECT_DOUBLE_EQ(m.z.back(), 0.5e-3);
  EXPECT_GE(m.domain_radius(), 3e-6);
}

TEST(Mesh, Errors) {
  AxisymMesh m{{0.0, 1.0, 1.0}, {0.0, 1.0}};
  EXPECT_THROW(validate(m), parameter_error);
  MeshSpec s;
  s.domain_radius = s.radius;
  EXPECT_THROW(make_mesh(s), parameter_error);
}

TEST(Solver, ParallelPlate) {
  const auto mesh = make_uniform_mesh(2e-4, 0.5e-3, 11, 41);
  const auto f = solve(plate(), eps300, -3.0, mesh);
  for (std::size_t j = 0; j < mesh.nz(); ++j)
    for (std::size_t i = 0; i < mesh.nr(); ++i) EXPECT_NEAR(field_z(f, i, j), 6000.0, 6000.0 * 1e-9);
  const auto p = interface_profile(f, 0.1e-3);
  EXPECT_NEAR(p.enhancement, 1.0, 0.01);
  EXPECT_LT(f.flux_imbalance(), 1e-9);
}

TEST(Solver, ParallelPlateNonlinearIsStillUniform) {
  const auto mesh = make_uniform_mesh(2e-4, 0.5e-3, 6, 21);
  const auto f = solve(plate(), PermittivityModel{300.0, 1e3}, -3.0, mesh);
  EXPECT_TRUE(f.converged);
  EXPECT_NEAR(field_z(f, 2, 10), 6000.0, 6000.0 * 1e-6);
}

TEST(Solver, DiscEdgeFieldOrder) {
  const auto f = disc_field(1e-6, -3.0);
  const auto p = interface_profile(f, SamplingRule{}.depth(1e-6));
  EXPECT_GT(p.e_max, 1e7);
  EXPECT_LT(p.e_max, 4e7);
  EXPECT_NEAR(p.r_at_max, 1e-6, 0.05e-6);
  EXPECT_LT(f.flux_imbalance(), 5e-3);
}

TEST(Solver, LinearScalingAndAntisymmetry) {
  const auto a = disc_field(1e-6, -3.0);
  const auto b = disc_field(1e-6, 2.0);
  const auto c = disc_field(1e-6, 3.0);
  double peak = 0.0;
  for (double x : a.phi) peak = std::max(peak, std::abs(x));
  for (std::size_t k = 0; k < a.phi.size(); ++k) {
    EXPECT_NEAR(b.phi[k], -2.0 / 3.0 * a.phi[k], 1e-12 * peak);
    EXPECT_NEAR(c.phi[k], -a.phi[k], 1e-12 * peak);
  }
}

TEST(Solver, Superposition) {
  const auto a = disc_field(1e-5, -1.25);
  const auto b = disc_field(1e-5, 0.5);
  const auto ab = disc_field(1e-5, -0.75);
  for (std::size_t k = 0; k < ab.phi.size(); ++k) EXPECT_NEAR(a.phi[k] + b.phi[k], ab.phi[k], 1e-12);
}

TEST(Solver, NonlinearOddSymmetry) {
  const PermittivityModel perm{300.0, 1e8};
  const auto a = disc_field(1e-6, -3.0, perm);
  const auto b = disc_field(1e-6, 3.0, perm);
  EXPECT_TRUE(a.converged);
  EXPECT_GT(a.iterations, 1);
  for (std::size_t k = 0; k < a.phi.size(); ++k) EXPECT_NEAR(a.phi[k], -b.phi[k], 1e-8);
  // field-dependent permittivity lowers eps under the edge and sharpens the field
  const auto lin = interface_profile(disc_field(1e-6, -3.0), SamplingRule{}.depth(1e-6));
  const auto non = interface_profile(a, SamplingRule{}.depth(1e-6));
  EXPECT_NE(lin.e_max, non.e_max);
}

TEST(Solver, PicardCapRaisesWithHistory) {
  SamplingRule rule;
  rule.solver.max_iterations = 2;
  try {
    disc_field(1e-6, -3.0, PermittivityModel{300.0, 1e6}, rule);
    FAIL() << "expected numerical_error";
  } catch (const numerical_error& e) {
    EXPECT_EQ(e.history().size(), 3u);
  }
}

TEST(Solver, RejectsCoarseEdge) {
  DeviceGeometry g = study_geometry(1e-6);
  const auto coarse = make_uniform_mesh(3e-6, 0.5e-3, 13, 50);
  EXPECT_THROW(solve(g, eps300, -3.0, coarse), parameter_error);
  const auto narrow = make_uniform_mesh(2e-6, 0.5e-3, 2001, 50);
  EXPECT_THROW(solve(g, eps300, -3.0, narrow), parameter_error);
}

TEST(Profile, DepthErrors) {
  const auto f = disc_field(1e-6, -3.0);
  EXPECT_THROW(interface_profile(f, 0.0), parameter_error);
  EXPECT_THROW(interface_profile(f, 1.0), parameter_error);
  EXPECT_THROW(interface_profile(f, 1e-12), parameter_error);
}

TEST(Profile, EnhancementGrowsAsRadiusShrinks) {
  const auto ps = radius_study({1e-4, 1e-5, 1e-6}, eps300, -3.0);
  ASSERT_EQ(ps.size(), 3u);
  EXPECT_LT(ps[0].e_max, ps[1].e_max);
  EXPECT_LT(ps[1].e_max, ps[2].e_max);
  EXPECT_LT(ps[0].enhancement, ps[2].enhancement);
  EXPECT_LT(ps[0].enhancement, ps[1].enhancement);
  EXPECT_THROW(radius_study({1e-6, 1e-5}, eps300, -3.0), parameter_error);
}

TEST(Profile, SubMicronSaturation) {
  const auto ps = radius_study({100e-9, 50e-9, 10e-9}, eps300, -3.0);
  const double up1 = ps[1].e_max / ps[0].e_max - 1.0;
  const double up2 = ps[2].e_max / ps[1].e_max - 1.0;
  EXPECT_GT(up1, 0.0);
  EXPECT_LT(up2, up1);
}

TEST(Profile, Deterministic) {
  const auto ps = radius_study({1e-6, 1e-6}, eps300, -3.0);
  EXPECT_EQ(ps[0].e_z, ps[1].e_z);
}

TEST(Profile, EdgeZoneCalibration) {
  const auto p = interface_profile(disc_field(1e-6, -3.0), SamplingRule{}.depth(1e-6));
  const double w = calibrate_edge_zone(p);
  EXPECT_GT(w, 0.0);
  EXPECT_LT(w, 1e-6);
  EXPECT_LT(calibrate_edge_zone(p, 4.0), w);
}

TEST(Convergence, ParallelPlateExact) {
  const auto rep = grid_convergence(plate(), eps300, -3.0, 3);
  for (double e : rep.e_center) EXPECT_NEAR(e, 6000.0, 6000.0 * 1e-8);
}

TEST(Convergence, DiscCenterExtrapolates) {
  const DeviceGeometry g = study_geometry(1e-5);
  const auto r3 = grid_convergence(g, eps300, -3.0, 3);
  const auto r4 = grid_convergence(g, eps300, -3.0, 4);
  EXPECT_NEAR(r3.e_center_extrapolated, r4.e_center_extrapolated, 0.01 * r4.e_center_extrapolated);
  EXPECT_GT(r4.observed_order, 1.0);
  // at a fixed sampling depth the peak field settles instead of growing
  EXPECT_FALSE(r4.e_max_mesh_sensitive);
  const auto& em = r4.e_max;
  EXPECT_LT(std::abs(em[3] - em[2]), std::abs(em[2] - em[1]));
  EXPECT_THROW(grid_convergence(g, eps300, -3.0, 2), parameter_error);
}
