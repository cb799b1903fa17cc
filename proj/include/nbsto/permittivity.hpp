#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "nbsto/core/constants.hpp"
#include "nbsto/core/errors.hpp"
#include "nbsto/core/params.hpp"

namespace nbsto {

/// Field-dependent relative permittivity
///   eps(E) = max(1, eps_zero / sqrt(1 + (E / e_char)^2)).
/// An infinite `e_char` gives the constant-permittivity limit.
struct PermittivityModel {
  double eps_zero = 300.0;
  double e_char = 1.0e7;  // V/m

  static PermittivityModel constant(double eps) {
    return {eps, std::numeric_limits<double>::infinity()};
  }
  static PermittivityModel from(const MaterialParams& m) {
    return {m.eps_zero, m.eps_field_scale};
  }
  bool is_constant() const { return std::isinf(e_char); }
};

inline double eps(const PermittivityModel& model, double e_field) {
  if (model.is_constant()) return model.eps_zero;
  const double s = e_field / model.e_char;
  return std::max(1.0, model.eps_zero / std::sqrt(1.0 + s * s));
}

/// Built-in potential phi_B - kT/q ln(N_c / N_d), volts.
inline double built_in_potential(const MaterialParams& m) {
  return m.barrier_height -
         constants::thermal_voltage(m.temperature) * std::log(m.conduction_dos / m.donor_density);
}

struct DepletionOptions {
  double rel_tol = 1e-10;
  int max_iterations = 200;
  /// Multiplies the junction field before it enters eps(E); edge zones use
  /// their field gain here.
  double field_gain = 1.0;
};

/// Self-consistent Schottky depletion width under reverse bias `v_reverse`.
///
/// Fixed point of W = sqrt(2 eps(E_max) eps_vac (V_bi + V_r) / (q N_d)) with
/// E_max = q N_d W / (eps eps_vac), which at the fixed point equals
/// 2 (V_bi + V_r) / W. The map is a contraction (slope <= 1/2 in the
/// roll-off regime), so plain iteration converges.
inline double depletion_width(const MaterialParams& mat, double v_reverse,
                              const DepletionOptions& opt = {}) {
  if (!(v_reverse >= 0.0) || !std::isfinite(v_reverse))
    throw parameter_error("depletion_width: v_reverse must be >= 0");
  const double v_total = built_in_potential(mat) + v_reverse;
  if (!(v_total > 0.0))
    throw parameter_error("depletion_width: V_bi + V_r must be > 0 (check barrier and doping)");

  const PermittivityModel model = PermittivityModel::from(mat);
  const double scale = 2.0 * constants::vacuum_permittivity * v_total /
                       (constants::elementary_charge * mat.donor_density);
  double w = std::sqrt(scale * model.eps_zero);
  std::vector<double> history;
  for (int it = 0; it < opt.max_iterations; ++it) {
    const double e_max = 2.0 * v_total / w;
    const double w_next = std::sqrt(scale * eps(model, opt.field_gain * e_max));
    const double change = std::abs(w_next - w) / w_next;
    history.push_back(change);
    w = w_next;
    if (change < opt.rel_tol) return w;
  }
  throw numerical_error("depletion_width: fixed point did not converge in " +
                            std::to_string(opt.max_iterations) + " iterations",
                        std::move(history));
}

/// Peak junction field 2 (V_bi + V_r) / W for a converged width.
inline double junction_field(const MaterialParams& mat, double v_reverse, double width) {
  return 2.0 * (built_in_potential(mat) + v_reverse) / width;
}

}  // namespace nbsto
