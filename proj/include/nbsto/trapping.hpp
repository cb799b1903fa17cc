#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "nbsto/core/constants.hpp"
#include "nbsto/core/errors.hpp"
#include "nbsto/core/params.hpp"
#include "nbsto/core/trace.hpp"
#include "nbsto/ode/adaptive_rk.hpp"

namespace nbsto {

struct TrapState {
  double n = 0.0;           // 1/m^3, trapped density
  double q_injected = 0.0;  // C/m^2, cumulative injected charge
  double t = 0.0;           // s
};

/// Rate laws for electron capture. `coulombic` is first-order capture with
/// Coulombic deactivation of neighbouring sites (the default);
/// `first_order` omits the deactivation; `trap_generation` lets the
/// available trap density grow with injected charge as n0 (1 + Q / q_gen).
enum class RateLaw { coulombic, first_order, trap_generation };

struct RateLawOptions {
  RateLaw kind = RateLaw::coulombic;
  double q_gen = 1.0e3;  // C/m^2, only used by trap_generation
};

/// Bare capture rate n0 sigma J v_th / (q v_d), 1/(m^3 s).
inline double bare_trapping_rate(double j, const TrapParams& p) {
  return p.n0_max * p.sigma * j * p.v_th / (constants::elementary_charge * p.v_d);
}

/// dn/dt for injected flux magnitude `j` (A/m^2).
inline double trapping_rate(const TrapState& s, double j, const TrapParams& p,
                            const RateLawOptions& law = {}) {
  if (!(j >= 0.0)) throw parameter_error("trapping_rate: j must be >= 0");
  const double capture = p.sigma * j * p.v_th / (constants::elementary_charge * p.v_d);
  switch (law.kind) {
    case RateLaw::coulombic:
      return p.n0_max * capture * std::exp(-s.n / p.capacity());
    case RateLaw::first_order:
      return std::max(p.n0_max - s.n, 0.0) * capture;
    case RateLaw::trap_generation:
      return std::max(p.n0_max * (1.0 + s.q_injected / law.q_gen) - s.n, 0.0) * capture;
  }
  return 0.0;
}

/// Closed form n = (V/h) ln(Q/Q* + 1) of the Coulombic law under any
/// injection history with total charge Q.
inline double trapped_density(double q_injected, const TrapParams& p) {
  if (!(q_injected >= 0.0)) throw parameter_error("trapped_density: Q must be >= 0");
  return p.capacity() * std::log1p(q_injected / p.q_star());
}

struct CvsExponents {
  double beta = 0.0;
  double alpha = 0.0;
  double q_star = 0.0;   // C/m^2
  double m_coeff = 0.0;  // m/V: slope of (alpha/(1-alpha)) ln J_s against E_ap
};

inline double alpha_from_beta(double beta) { return beta / (1.0 + beta); }
inline double beta_from_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw parameter_error("beta_from_alpha: alpha must lie in (0, 1)");
  return alpha / (1.0 - alpha);
}

/// beta = (V/h) q x / (E0 eps_r eps_vac); alpha = beta / (1 + beta).
inline CvsExponents exponents_from_params(const TrapParams& p, double eps_r) {
  validate(p);
  if (!(eps_r > 0.0)) throw parameter_error("exponents_from_params: eps_r must be > 0");
  const double eta = eps_r * constants::vacuum_permittivity;
  CvsExponents out;
  out.beta = p.capacity() * constants::elementary_charge * p.x_centroid / (p.e0_scale * eta);
  out.alpha = alpha_from_beta(out.beta);
  out.q_star = p.q_star();
  out.m_coeff = out.alpha / p.e0_scale;
  return out;
}

/// Field-feedback conduction J(n) = J0 exp((E_ap - q n x / eta) / E0).
inline double feedback_current(double e_ap, double n, const TrapParams& p, double eps_r) {
  const double eta = eps_r * constants::vacuum_permittivity;
  const double e = e_ap - constants::elementary_charge * n * p.x_centroid / eta;
  return p.j0_ref * std::exp(e / p.e0_scale);
}

struct ConstantBiasResult {
  TimeSeriesTrace trace;    // i column holds J in A/m^2; v column holds E_ap in V/m
  std::vector<double> n;    // trapped density at each sample
  double t_onset = 0.0;     // s, Q*/((1+beta) J(0)); power law holds for t >> t_onset
  bool validity_exceeded = false;  // n crossed 0.1 n0, where n0 >> n no longer holds
};

struct ConstantBiasOptions {
  RateLawOptions law{};
  double rel_tol = 1e-8;
  double t_first = 0.0;  // first log sample; 0 means t_end * 1e-8
};

/// Constant applied field with trapping feedback, n(0) = 0. Samples are
/// log-spaced on [t_first, t_end].
inline ConstantBiasResult simulate_constant_bias(double e_ap, const TrapParams& p, double eps_r,
                                                 double t_end, std::size_t n_samples,
                                                 const ConstantBiasOptions& opt = {}) {
  validate(p);
  if (!(t_end > 0.0)) throw parameter_error("simulate_constant_bias: t_end must be > 0");
  if (!std::isfinite(e_ap)) throw parameter_error("simulate_constant_bias: e_ap must be finite");
  if (n_samples < 2) throw parameter_error("simulate_constant_bias: need >= 2 samples");

  const double cap = p.capacity();
  const CvsExponents ex = exponents_from_params(p, eps_r);
  ConstantBiasResult out;
  out.trace.meta().protocol = "constant_bias";
  const double j_initial = feedback_current(e_ap, 0.0, p, eps_r);
  out.t_onset = j_initial > 0.0 ? ex.q_star / ((1.0 + ex.beta) * j_initial) : 0.0;

  const double t_first = opt.t_first > 0.0 ? opt.t_first : t_end * 1e-8;
  std::vector<double> times(n_samples);
  for (std::size_t k = 0; k < n_samples; ++k)
    times[k] = t_first * std::pow(t_end / t_first, static_cast<double>(k) / static_cast<double>(n_samples - 1));

  // state: u = n / capacity, Q (C/m^2)
  auto rhs = [&](double, const std::array<double, 2>& y) {
    const TrapState s{y[0] * cap, y[1], 0.0};
    const double j = feedback_current(e_ap, s.n, p, eps_r);
    return std::array<double, 2>{trapping_rate(s, j, p, opt.law) / cap, j};
  };

  ode::StepDoublingOptions so;
  so.rel_tol = opt.rel_tol;
  so.abs_tol = 1e-14;
  so.h_init = t_first * 1e-3;
  ode::StepDoublingRk4<2> rk(so);
  std::array<double, 2> y{0.0, 0.0};
  double t = 0.0;
  out.n.reserve(n_samples);
  out.trace.reserve(n_samples);
  for (double tk : times) {
    rk.advance(rhs, t, y, tk);
    const double n = y[0] * cap;
    if (n > 0.1 * p.n0_max) out.validity_exceeded = true;
    out.n.push_back(n);
    out.trace.push_back({tk, e_ap, feedback_current(e_ap, n, p, eps_r)});
  }
  return out;
}

/// Trapped density after constant injection `j` for each time in `times`,
/// integrating the rate law numerically.
inline std::vector<double> integrate_constant_injection(double j, const TrapParams& p,
                                                        std::span<const double> times,
                                                        const RateLawOptions& law = {},
                                                        double rel_tol = 1e-8) {
  validate(p);
  const double cap = p.capacity();
  auto rhs = [&](double, const std::array<double, 2>& y) {
    const TrapState s{y[0] * cap, y[1], 0.0};
    return std::array<double, 2>{trapping_rate(s, j, p, law) / cap, j};
  };
  ode::StepDoublingOptions so;
  so.rel_tol = rel_tol;
  so.abs_tol = 1e-16;
  if (!times.empty()) so.h_init = times.front() * 1e-3;
  ode::StepDoublingRk4<2> rk(so);
  std::array<double, 2> y{0.0, 0.0};
  double t = 0.0;
  std::vector<double> out;
  out.reserve(times.size());
  for (double tk : times) {
    rk.advance(rhs, t, y, tk);
    out.push_back(y[0] * cap);
  }
  return out;
}

struct LogLogFit {
  double alpha = 0.0;  // J ~ J_s t^(-alpha)
  double ln_js = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares of ln J against ln t over samples with
/// t in [t_lo, t_hi].
inline LogLogFit fit_log_log(const TimeSeriesTrace& trace, double t_lo, double t_hi) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  std::size_t m = 0;
  for (const auto& r : trace.records()) {
    if (r.t < t_lo || r.t > t_hi || !(std::abs(r.i) > 0.0)) continue;
    const double x = std::log(r.t), y = std::log(std::abs(r.i));
    sx += x; sy += y; sxx += x * x; sxy += x * y; syy += y * y;
    ++m;
  }
  if (m < 3) throw fit_error("fit_log_log: fewer than 3 samples in window");
  const double dm = static_cast<double>(m);
  const double sxx_c = sxx - sx * sx / dm, sxy_c = sxy - sx * sy / dm, syy_c = syy - sy * sy / dm;
  if (!(sxx_c > 0.0)) throw fit_error("fit_log_log: degenerate time window");
  const double slope = sxy_c / sxx_c;
  LogLogFit f;
  f.alpha = -slope;
  f.ln_js = (sy - slope * sx) / dm;
  f.r2 = syy_c > 0.0 ? sxy_c * sxy_c / (sxx_c * syy_c) : 1.0;
  f.points = m;
  return f;
}

struct FamilyMember {
  double e_ap;   // V/m
  double j_s;    // fitted prefactor, A/m^2 s^alpha
  double alpha;  // fitted exponent
};

struct JsRelation {
  double m_coeff = 0.0;   // slope, m/V
  double n_est = 0.0;     // intercept
  double residual = 0.0;  // ||y - fit||
  double r2 = 0.0;
};

/// Least squares of (alpha/(1-alpha)) ln J_s against E_ap across a family of
/// constant-bias runs.
inline JsRelation j_s_relation_check(std::span<const FamilyMember> family) {
  if (family.size() < 3) throw parameter_error("j_s_relation_check: need >= 3 family members");
  std::vector<double> x, y;
  for (const auto& f : family) {
    if (!(f.alpha > 0.0 && f.alpha < 1.0) || !(f.j_s > 0.0))
      throw parameter_error("j_s_relation_check: need 0 < alpha < 1 and J_s > 0");
    x.push_back(f.e_ap);
    y.push_back(f.alpha / (1.0 - f.alpha) * std::log(f.j_s));
  }
  const double m = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < x.size(); ++k) { mx += x[k]; my += y[k]; }
  mx /= m; my /= m;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (!(sxx > 1e-12 * (mx * mx + 1.0) * m))
    throw fit_error("j_s_relation_check: degenerate design matrix (all E_ap equal)");
  JsRelation out;
  out.m_coeff = sxy / sxx;
  out.n_est = my - out.m_coeff * mx;
  double rss = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double r = y[k] - (out.n_est + out.m_coeff * x[k]);
    rss += r * r;
  }
  out.residual = std::sqrt(rss);
  out.r2 = syy > 0.0 ? 1.0 - rss / syy : 1.0;
  return out;
}

}  // namespace nbsto
