#include <gtest/gtest.h>

#include <cmath>

#include "nbsto/permittivity.hpp"

using namespace nbsto;

namespace {

// Material whose built-in potential is exactly 1 V.
MaterialParams one_volt_material(double e_char) {
  MaterialParams m;
  m.eps_zero = 300.0;
  m.eps_field_scale = e_char;
  m.donor_density = 1e25;
  m.conduction_dos = 1e25;  // ln(Nc/Nd) = 0
  m.barrier_height = 1.0;
  return m;
}

// Independent oracle: bisection on f(W) = W - sqrt(2 eps(2V/W) e0 V / (q Nd)).
double width_by_bisection(const MaterialParams& m, double v_total, double gain = 1.0) {
  const PermittivityModel model = PermittivityModel::from(m);
  auto f = [&](double w) {
    const double e = gain * 2.0 * v_total / w;
    return w - std::sqrt(2.0 * eps(model, e) * constants::vacuum_permittivity * v_total /
                         (constants::elementary_charge * m.donor_density));
  };
  double lo = 1e-12, hi = 1e-5;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(Permittivity, Examples) {
  const PermittivityModel m{300.0, 1e7};
  EXPECT_DOUBLE_EQ(eps(m, 0.0), 300.0);
  EXPECT_NEAR(eps(m, 1e7), 212.13203435596427, 1e-10);
  EXPECT_DOUBLE_EQ(eps(m, -1e7), eps(m, 1e7));
  EXPECT_DOUBLE_EQ(eps(m, 1e15), 1.0);  // clamped
  EXPECT_DOUBLE_EQ(eps(PermittivityModel::constant(300.0), 1e12), 300.0);
}

TEST(Permittivity, DecreasesWithField) {
  const PermittivityModel m{300.0, 1e7};
  double prev = eps(m, 0.0);
  for (double e = 1e5; e < 1e10; e *= 1.7) {
    const double now = eps(m, e);
    EXPECT_LE(now, prev);
    prev = now;
  }
}

TEST(Depletion, ConstantEpsClosedForm) {
  const auto m = one_volt_material(std::numeric_limits<double>::infinity());
  EXPECT_NEAR(built_in_potential(m), 1.0, 1e-15);
  // sqrt(2 * 300 * e0 * 1 / (q * 1e25)), evaluated offline
  EXPECT_NEAR(depletion_width(m, 0.0), 5.7583067084293674e-08, 1e-20);
}

TEST(Depletion, FieldDependentSmaller) {
  const auto m = one_volt_material(1e7);
  const double w = depletion_width(m, 0.0);
  EXPECT_LT(w, depletion_width(one_volt_material(std::numeric_limits<double>::infinity()), 0.0));
  // frozen from an offline root solve of the same scalar equation
  EXPECT_NEAR(w, 1.652275970788313e-08, 1e-8 * w);
  EXPECT_NEAR(w, width_by_bisection(m, 1.0), 1e-8 * w);
}

TEST(Depletion, AgreesWithBisectionAcrossBias) {
  const MaterialParams m;
  for (double vr : {0.0, 0.1, 0.5, 1.0, 3.0, 8.0}) {
    const double w = depletion_width(m, vr);
    EXPECT_NEAR(w, width_by_bisection(m, built_in_potential(m) + vr), 1e-8 * w) << vr;
    DepletionOptions opt;
    opt.field_gain = 11.4;
    const double wg = depletion_width(m, vr, opt);
    EXPECT_NEAR(wg, width_by_bisection(m, built_in_potential(m) + vr, 11.4), 1e-8 * wg) << vr;
  }
}

TEST(Depletion, MonotoneAndPositive) {
  const MaterialParams m;
  double prev = depletion_width(m, 0.0);
  EXPECT_GT(prev, 0.0);
  for (double vr = 0.05; vr < 6.0; vr += 0.25) {
    const double w = depletion_width(m, vr);
    EXPECT_GT(w, prev);
    prev = w;
  }
}

TEST(Depletion, BarrierNarrowing) {
  MaterialParams nonlinear;
  MaterialParams linear = nonlinear;
  linear.eps_field_scale = std::numeric_limits<double>::infinity();
  for (double vr : {0.0, 0.3, 1.0, 3.0}) EXPECT_LT(depletion_width(nonlinear, vr), depletion_width(linear, vr));
}

TEST(Depletion, Errors) {
  const MaterialParams m;
  EXPECT_THROW(depletion_width(m, -0.1), parameter_error);
  DepletionOptions opt;
  opt.max_iterations = 1;
  opt.rel_tol = 1e-300;
  try {
    depletion_width(m, 1.0, opt);
    FAIL() << "expected numerical_error";
  } catch (const numerical_error& e) {
    EXPECT_EQ(e.history().size(), 1u);
  }
  MaterialParams bad = m;
  bad.barrier_height = 0.01;
  EXPECT_THROW(depletion_width(bad, 0.0), parameter_error);
}
