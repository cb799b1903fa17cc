#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "nbsto/core/constants.hpp"
#include "nbsto/core/errors.hpp"
#include "nbsto/core/params.hpp"
#include "nbsto/electrostatics/profile.hpp"
#include "nbsto/permittivity.hpp"
#include "nbsto/transport.hpp"
#include "nbsto/trapping.hpp"

namespace nbsto::device {

/// Tunable parts of the two-zone model that are not material constants.
struct DeviceConfig {
  ConductionLaw law{Mechanism::exponential, 0.5, 1.0e13};
  double barrier_lowering = 0.5;       // gamma in phi_eff = phi_B - gamma |V|
  double edge_trap_boost = 3.0;        // n0(edge) / n0(center)
  double detrap_rate = 3.0e-4;         // 1/s, k_d
  double detrap_field = 4.5e8;         // V/m, E_d
  double max_detrap_exponent = 200.0;  // cap on |E| / E_d
  double series_resistance = 1.0e-6;   // ohm m^2, specific, in series with each zone
  double burn_in_fraction = 0.02;      // trapped density left by the first positive excursion / capacity
  RateLawOptions rate_law{};
  double rel_tol = 1e-6;               // integration tolerances on n / capacity
  double abs_tol = 1e-8;
  double max_relative_change = 0.1;    // limit for a single `step`
};

/// One of the two zones. `h_hint` is the integrator's last step size.
struct ZoneState {
  double area = 0.0;         // m^2
  TrapState trap{};
  double n0_local = 0.0;     // 1/m^3
  double field_gain = 1.0;
  double h_hint = 0.0;       // s
};

namespace detail {

/// Depletion width against reverse bias, tabulated once per zone.
class WidthTable {
 public:
  WidthTable(const MaterialParams& mat, double gain, double v_max = 8.0, std::size_t points = 3201)
      : mat_(mat), gain_(gain), v_max_(v_max), dv_(v_max / static_cast<double>(points - 1)) {
    w_.resize(points);
    for (std::size_t k = 0; k < points; ++k) w_[k] = direct(dv_ * static_cast<double>(k));
  }

  double operator()(double v_reverse) const {
    if (v_reverse >= v_max_) return direct(v_reverse);
    const double x = v_reverse / dv_;
    const auto k = static_cast<std::size_t>(x);
    const double f = x - static_cast<double>(k);
    return w_[k] * (1.0 - f) + w_[k + 1] * f;
  }

  double gain() const { return gain_; }

 private:
  double direct(double v) const {
    DepletionOptions opt;
    opt.field_gain = gain_;
    return depletion_width(mat_, v, opt);
  }

  MaterialParams mat_;
  double gain_, v_max_, dv_;
  std::vector<double> w_;
};

}  // namespace detail

struct DeviceState {
  DeviceGeometry geometry;
  MaterialParams material;
  DeviceConfig config;
  ZoneState center, edge;
  long cycle_count = 0;
  double t = 0.0;
  bool virgin = true;
  bool positive_excursion = false;
  std::shared_ptr<const detail::WidthTable> center_width, edge_width;

  double area() const { return center.area + edge.area; }
};

/// Trap parameters seen by a zone: the material's, with the zone's n0.
inline TrapParams zone_trap(const DeviceState& s, const ZoneState& z) {
  TrapParams p = s.material.trap;
  p.n0_max = z.n0_local;
  return p;
}

inline void validate(const DeviceConfig& c) {
  using nbsto::detail::require;
  require(c.law.v0 > 0.0 && c.law.j_ref >= 0.0, "device: conduction law needs v0 > 0, j_ref >= 0");
  require(c.barrier_lowering >= 0.0, "device: barrier_lowering must be >= 0");
  require(c.edge_trap_boost >= 1.0, "device: edge_trap_boost must be >= 1");
  require(c.detrap_rate >= 0.0 && c.detrap_field > 0.0, "device: need detrap_rate >= 0, detrap_field > 0");
  require(c.series_resistance >= 0.0, "device: series_resistance must be >= 0");
  require(c.burn_in_fraction >= 0.0, "device: burn_in_fraction must be >= 0");
  require(c.rel_tol > 0.0 && c.abs_tol > 0.0, "device: tolerances must be > 0");
  require(c.max_relative_change > 0.0, "device: max_relative_change must be > 0");
}

/// Virgin device (n = 0 in both zones) with the given edge field gain.
inline DeviceState new_device(const DeviceGeometry& geom, const MaterialParams& mat, double edge_gain,
                              const DeviceConfig& config = {}) {
  validate(geom);
  validate(mat);
  validate(config);
  if (!(edge_gain >= 1.0) || !std::isfinite(edge_gain)) throw parameter_error("new_device: edge gain must be >= 1");
  const double a_center = geom.center_area(), a_edge = geom.edge_area();
  if (!(a_center > 0.0) || !(a_edge > 0.0) || std::abs(a_center + a_edge - geom.area()) > 1e-12 * geom.area())
    throw parameter_error("new_device: inconsistent zone partition");

  DeviceState s;
  s.geometry = geom;
  s.material = mat;
  s.config = config;
  s.center.area = a_center;
  s.center.n0_local = mat.trap.n0_max;
  s.center.field_gain = 1.0;
  s.edge.area = a_edge;
  s.edge.n0_local = mat.trap.n0_max * config.edge_trap_boost;
  s.edge.field_gain = edge_gain;
  s.center_width = std::make_shared<detail::WidthTable>(mat, 1.0);
  s.edge_width = edge_gain == 1.0 ? s.center_width : std::make_shared<detail::WidthTable>(mat, edge_gain);
  return s;
}

/// Edge gain taken from a solved field profile.
inline DeviceState new_device(const DeviceGeometry& geom, const MaterialParams& mat,
                              const electrostatics::FieldProfile& profile, const DeviceConfig& config = {}) {
  return new_device(geom, mat, profile.enhancement, config);
}

/// Homogeneous control: no field gain and equal trap density in both zones.
inline DeviceState new_null_device(const DeviceGeometry& geom, const MaterialParams& mat, DeviceConfig config = {}) {
  config.edge_trap_boost = 1.0;
  return new_device(geom, mat, 1.0, config);
}

/// Junction quantities of one zone at a given bias.
struct ZoneResponse {
  double j = 0.0;             // A/m^2, total
  double j_tunnel = 0.0;      // A/m^2
  double j_thermionic = 0.0;  // A/m^2
  double v_junction = 0.0;    // V, bias across the barrier after the series drop
  double width = 0.0;         // m, W_eff
  double e_local = 0.0;       // V/m, gain * |v| / W_eff with v the device bias
  double alpha = 0.0;
};

namespace detail {

inline double tunnel_prefactor(const ConductionLaw& law, double v, double alpha) {
  if (v == 0.0) return 0.0;
  if (law.mechanism == Mechanism::fowler_nordheim && v <= fowler_nordheim_min_bias) return 0.0;
  return j_s(law, v, alpha);
}

/// Zone current density with `vj` across the junction and `v` across the device.
inline ZoneResponse junction(const DeviceState& s, const ZoneState& z, const WidthTable& wt, double v, double vj,
                             double n) {
  const MaterialParams& mat = s.material;
  const TrapParams& tp = mat.trap;
  ZoneResponse r;
  r.v_junction = vj;
  r.width = wt(std::max(-vj, 0.0)) + n * tp.x_centroid / mat.donor_density;
  r.e_local = z.field_gain * std::abs(v) / r.width;
  const double eps_r = eps(PermittivityModel::from(mat), r.e_local);
  const double beta = tp.capacity() * constants::elementary_charge * tp.x_centroid /
                      (tp.e0_scale * eps_r * constants::vacuum_permittivity);
  r.alpha = beta / (1.0 + beta);
  r.j_thermionic = thermionic(mat, vj);
  const double mag = tunnel_prefactor(s.config.law, std::abs(vj), r.alpha);
  r.j_tunnel = mag == 0.0 ? 0.0 : std::copysign(tunneling_factor(mat, r.width, vj, s.config.barrier_lowering) * mag, vj);
  r.j = r.j_thermionic + r.j_tunnel;
  return r;
}

}  // namespace detail

/// Zone response at device bias `v`, solving v = v_j + rho J(v_j) for the
/// junction voltage by safeguarded false position.
inline ZoneResponse zone_response(const DeviceState& s, const ZoneState& z, const detail::WidthTable& wt, double v,
                                  double n) {
  const double rho = s.config.series_resistance;
  if (v == 0.0) return detail::junction(s, z, wt, v, 0.0, n);
  if (rho == 0.0) return detail::junction(s, z, wt, v, v, n);
  double lo = std::min(0.0, v), hi = std::max(0.0, v);
  auto f = [&](double vj) { return vj + rho * detail::junction(s, z, wt, v, vj, n).j - v; };
  double f_lo = f(lo), f_hi = f(hi);
  if (f_lo >= 0.0) return detail::junction(s, z, wt, v, lo, n);
  if (f_hi <= 0.0) return detail::junction(s, z, wt, v, hi, n);
  int side = 0;
  for (int it = 0; it < 200; ++it) {
    double x = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
    if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
    const double fx = f(x);
    if (fx == 0.0 || hi - lo < 1e-13 * (1.0 + std::abs(v))) return detail::junction(s, z, wt, v, x, n);
    if (fx < 0.0) {
      lo = x;
      f_lo = fx;
      if (side == -1) f_hi *= 0.5;
      side = -1;
    } else {
      hi = x;
      f_hi = fx;
      if (side == +1) f_lo *= 0.5;
      side = +1;
    }
  }
  return detail::junction(s, z, wt, v, 0.5 * (lo + hi), n);
}

inline ZoneResponse center_response(const DeviceState& s, double v) {
  return zone_response(s, s.center, *s.center_width, v, s.center.trap.n);
}
inline ZoneResponse edge_response(const DeviceState& s, double v) {
  return zone_response(s, s.edge, *s.edge_width, v, s.edge.trap.n);
}

struct CurrentSample {
  double i = 0.0;         // A
  double i_center = 0.0;  // A
  double i_edge = 0.0;    // A
};

inline CurrentSample device_current(const DeviceState& s, double v) {
  CurrentSample c;
  c.i_center = s.center.area * center_response(s, v).j;
  c.i_edge = s.edge.area * edge_response(s, v).j;
  c.i = c.i_center + c.i_edge;
  return c;
}

namespace detail {

struct Rate {
  double dn_dt = 0.0;   // 1/(m^3 s)
  double j_inject = 0.0;  // A/m^2, flux that feeds the traps
};

/// Trapping from the tunnelling flux at either polarity, and field-assisted
/// release under positive junction bias.
inline Rate zone_rate(const DeviceState& s, const ZoneState& z, const WidthTable& wt, double v, double n, double q) {
  const ZoneResponse r = zone_response(s, z, wt, v, n);
  const DeviceConfig& c = s.config;
  Rate out;
  out.j_inject = std::abs(r.j_tunnel);
  const TrapState ts{n, q, 0.0};
  out.dn_dt = trapping_rate(ts, out.j_inject, zone_trap(s, z), c.rate_law);
  if (v > 0.0 && c.detrap_rate > 0.0)
    out.dn_dt -= c.detrap_rate * std::exp(std::min(r.e_local / c.detrap_field, c.max_detrap_exponent)) * n;
  return out;
}

/// One linearly implicit Euler step of a zone, with the bias taken at the
/// end of the step. Returns {n, q}.
inline std::pair<double, double> implicit_step(const DeviceState& s, const ZoneState& z, const WidthTable& wt,
                                               double n, double q, double v, double h) {
  const double cap = s.material.trap.capacity();
  const Rate r0 = zone_rate(s, z, wt, v, n, q);
  const double dn = 1e-7 * std::max(n, 1e-3 * cap);
  const Rate r1 = zone_rate(s, z, wt, v, n + dn, q);
  const double jac = std::min((r1.dn_dt - r0.dn_dt) / dn, 0.0);
  const double n_next = std::max(n + h * r0.dn_dt / (1.0 - h * jac), 0.0);
  return {n_next, q + h * r0.j_inject};
}

/// Integrates a zone over [0, dt] with the bias ramping linearly v0 -> v1,
/// using step doubling on the linearly implicit Euler step.
inline void integrate_zone(const DeviceState& s, ZoneState& z, const WidthTable& wt, double v0, double v1, double dt) {
  const double cap = s.material.trap.capacity();
  const DeviceConfig& c = s.config;
  double t = 0.0;
  double h = z.h_hint > 0.0 ? std::min(z.h_hint, dt) : dt;
  long guard = 0;
  while (t < dt) {
    if (++guard > 10'000'000) throw numerical_error("device: step budget exhausted", {t, z.trap.n});
    const bool last = t + h >= dt * (1.0 - 1e-12);
    const double step = last ? dt - t : h;
    auto v_at = [&](double tt) { return v0 + (v1 - v0) * (tt / dt); };
    const auto full = implicit_step(s, z, wt, z.trap.n, z.trap.q_injected, v_at(t + step), step);
    const auto mid = implicit_step(s, z, wt, z.trap.n, z.trap.q_injected, v_at(t + 0.5 * step), 0.5 * step);
    const auto half = implicit_step(s, z, wt, mid.first, mid.second, v_at(t + step), 0.5 * step);
    const double scale = c.abs_tol * cap + c.rel_tol * std::max(half.first, z.trap.n);
    const double err = std::abs(half.first - full.first) / scale;
    if (err <= 1.0 || step <= 1e-15 * std::max(dt, 1.0)) {
      const double extrapolated = 2.0 * half.first - full.first;
      z.trap.n = extrapolated >= 0.0 ? extrapolated : half.first;
      z.trap.q_injected = half.second;
      t = last ? dt : t + step;
      const double grow = err > 0.0 ? std::min(5.0, 0.9 / std::sqrt(err)) : 5.0;
      if (!last) h = step * grow;
      else if (err > 0.0) h = std::max(h, step * grow);
    } else {
      h = step * std::max(0.2, 0.9 / std::sqrt(err));
    }
  }
  z.h_hint = h;
}

}  // namespace detail

/// Single linearly implicit step at constant bias. Throws step_size_error
/// when either zone's trapped density changes by more than
/// `max_relative_change` of max(n, capacity / 1000).
inline DeviceState step(DeviceState s, double v, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw parameter_error("step: dt must be > 0");
  if (!std::isfinite(v)) throw parameter_error("step: v must be finite");
  const double cap = s.material.trap.capacity();
  double worst = 0.0;
  auto update = [&](ZoneState& z, const detail::WidthTable& wt) {
    const auto next = detail::implicit_step(s, z, wt, z.trap.n, z.trap.q_injected, v, dt);
    const double change = std::abs(next.first - z.trap.n) / std::max({z.trap.n, next.first, 1e-3 * cap});
    worst = std::max(worst, change);
    z.trap.n = next.first;
    z.trap.q_injected = next.second;
    z.trap.t += dt;
  };
  update(s.center, *s.center_width);
  update(s.edge, *s.edge_width);
  if (worst > s.config.max_relative_change)
    throw step_size_error("step: relative state change " + std::to_string(worst) + " exceeds limit; retry with dt <= " +
                              std::to_string(dt * s.config.max_relative_change / worst),
                          worst);
  s.t += dt;
  return s;
}

/// Adaptive integration over dt with the bias ramping linearly v0 -> v1.
inline DeviceState advance(DeviceState s, double v0, double v1, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw parameter_error("advance: dt must be > 0");
  if (!std::isfinite(v0) || !std::isfinite(v1)) throw parameter_error("advance: bias must be finite");
  detail::integrate_zone(s, s.center, *s.center_width, v0, v1, dt);
  detail::integrate_zone(s, s.edge, *s.edge_width, v0, v1, dt);
  s.center.trap.t += dt;
  s.edge.trap.t += dt;
  s.t += dt;
  if (s.virgin) {
    if (std::max(v0, v1) > 0.0) s.positive_excursion = true;
    if (s.positive_excursion && v1 <= 0.0) {
      const double floor = s.config.burn_in_fraction * s.material.trap.capacity();
      s.center.trap.n = std::max(s.center.trap.n, floor);
      s.edge.trap.n = std::max(s.edge.trap.n, floor);
      s.virgin = false;
    }
  }
  return s;
}

/// |lrs / hrs| for two reads of the same sign.
inline double memory_window(double hrs_i, double lrs_i) {
  if (hrs_i == 0.0) throw parameter_error("memory_window: HRS current is zero, window undefined");
  if (lrs_i == 0.0 || (hrs_i > 0.0) != (lrs_i > 0.0))
    throw parameter_error("memory_window: currents must be nonzero and of the same sign");
  return std::abs(lrs_i / hrs_i);
}

}  // namespace nbsto::device
