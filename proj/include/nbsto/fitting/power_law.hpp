#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nbsto/core/errors.hpp"
#include "nbsto/core/trace.hpp"
#include "nbsto/fitting/lm.hpp"

namespace nbsto::fitting {

struct PowerLawFit {
  double i0 = 0.0;            // A
  double t0 = 0.0;            // s
  double alpha = 0.0;
  double stderr_alpha = 0.0;
  double r2_adj = 0.0;        // in log|I|
  int iterations = 0;
  bool converged = false;
  LmStatus status = LmStatus::iteration_cap;
  std::vector<std::string> notes;
};

namespace detail {

inline double slope_last_decade(const std::vector<double>& x_t, const std::vector<double>& y) {
  const double t_end = x_t.back();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t k = 0; k < x_t.size(); ++k) {
    if (x_t[k] < 0.1 * t_end) continue;
    const double lx = std::log(x_t[k]);
    sx += lx; sy += y[k]; sxx += lx * lx; sxy += lx * y[k];
    ++m;
  }
  if (m < 2) {
    // fewer than two points in the last decade: use the last two
    const std::size_t n = x_t.size();
    return (y[n - 1] - y[n - 2]) / (std::log(x_t[n - 1]) - std::log(x_t[n - 2]));
  }
  const double d = m * sxx - sx * sx;
  return d > 0.0 ? (m * sxy - sx * sy) / d : 0.0;
}

}  // namespace detail

/// Fits |I| = I0 (t - t0)^(-alpha) in log|I| space with uniform weights.
/// Parameters are (ln I0, t0, alpha); t0 is kept below the first sample time.
inline PowerLawFit fit_power_law(const TimeSeriesTrace& trace, const LmOptions& options = {}) {
  const auto& rec = trace.records();
  if (rec.size() < 10) throw parameter_error("fit_power_law: need at least 10 samples");
  std::vector<double> t, y;
  for (std::size_t k = 0; k < rec.size(); ++k) {
    if (!(std::abs(rec[k].i) > 0.0)) throw parameter_error("fit_power_law: all currents must be nonzero");
    if (k > 0 && !(rec[k].t > rec[k - 1].t)) throw parameter_error("fit_power_law: t must be strictly increasing");
    t.push_back(rec[k].t);
    y.push_back(std::log(std::abs(rec[k].i)));
  }
  const double t_min = t.front(), span = t.back() - t.front();
  const double t0_init = t_min > 0.0 ? 0.0 : t_min - 1e-3 * span;
  std::vector<double> shifted(t.size());
  for (std::size_t k = 0; k < t.size(); ++k) shifted[k] = t[k] - t0_init;
  const double alpha_init = -detail::slope_last_decade(shifted, y);
  const double ln_i0_init = y.front() + alpha_init * std::log(shifted.front());

  // gap kept between t0 and the first sample
  const double gap = 1e-9 * std::max(std::abs(t_min), span);
  const ResidualFn res = [&](const Vector& p) {
    Vector r(static_cast<Eigen::Index>(t.size()));
    for (std::size_t k = 0; k < t.size(); ++k)
      r[static_cast<Eigen::Index>(k)] = p[0] - p[2] * std::log(t[k] - p[1]) - y[k];
    return r;
  };
  const ProjectFn proj = [&](Vector& p) {
    if (p[1] < t_min - gap) return false;
    p[1] = t_min - gap;
    return true;
  };

  LmOptions opt = options;
  if (opt.scale.empty()) opt.scale = {1.0, std::max(t_min - t0_init, 1e-12), 1.0};
  Vector init(3);
  init << ln_i0_init, t0_init, alpha_init;
  const LmResult lm = lm_fit(res, init, t.size(), opt, proj);

  PowerLawFit out;
  out.i0 = std::exp(lm.params[0]);
  out.t0 = lm.params[1];
  out.alpha = lm.params[2];
  out.stderr_alpha = lm.stderr_[2];
  out.iterations = lm.iterations;
  out.converged = lm.converged();
  out.status = lm.status;
  if (lm.projected) out.notes.push_back("t0 projected below the first sample time");
  if (!out.converged) out.notes.push_back("iteration cap reached: " + std::to_string(lm.iterations));

  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double ss_tot = 0.0;
  for (double v : y) ss_tot += (v - mean) * (v - mean);
  const double ss_res = 2.0 * lm.cost;
  const double m = static_cast<double>(y.size());
  out.r2_adj = ss_tot > 0.0 ? 1.0 - (ss_res / ss_tot) * (m - 1.0) / (m - 3.0) : 0.0;
  return out;
}

enum class Trend { decreasing_with_radius, violated, not_evaluable };

inline std::string to_string(Trend t) {
  switch (t) {
    case Trend::decreasing_with_radius: return "alpha increases as radius decreases";
    case Trend::violated: return "violated";
    case Trend::not_evaluable: return "not evaluable";
  }
  return "unknown";
}

/// Fits of one device at the two read voltages.
struct BranchFits {
  std::optional<PowerLawFit> positive;  // +0.3 V read
  std::optional<PowerLawFit> negative;  // -0.5 V read
};

struct ScalingRow {
  double radius = 0.0;  // m
  std::optional<double> alpha_positive, alpha_negative;
};

struct ScalingReport {
  std::vector<ScalingRow> rows;  // ascending radius
  Trend positive = Trend::not_evaluable;
  Trend negative = Trend::not_evaluable;
  std::vector<std::string> warnings;
  std::vector<std::string> annotations;
};

namespace detail {

inline Trend column_trend(const std::vector<ScalingRow>& rows, bool positive) {
  std::vector<double> a;
  for (const auto& r : rows) {
    const auto& v = positive ? r.alpha_positive : r.alpha_negative;
    if (v) a.push_back(std::abs(*v));
  }
  if (a.size() < 2) return Trend::not_evaluable;
  for (std::size_t k = 1; k < a.size(); ++k)
    if (!(a[k] < a[k - 1])) return Trend::violated;
  return Trend::decreasing_with_radius;
}

}  // namespace detail

/// |alpha| per radius and read branch, with the trend check on each column.
inline ScalingReport scaling_table(const std::map<double, BranchFits>& fits) {
  if (fits.empty()) throw parameter_error("scaling_table: no fits");
  ScalingReport rep;
  for (const auto& [radius, f] : fits) {
    ScalingRow row;
    row.radius = radius;
    if (f.positive) row.alpha_positive = std::abs(f.positive->alpha);
    else rep.warnings.push_back("missing +0.3 V branch at radius " + std::to_string(radius));
    if (f.negative) row.alpha_negative = std::abs(f.negative->alpha);
    else rep.warnings.push_back("missing -0.5 V branch at radius " + std::to_string(radius));
    for (const auto& a : {row.alpha_positive, row.alpha_negative})
      if (a && *a >= 1.0)
        rep.annotations.push_back("alpha = " + std::to_string(*a) + " at radius " + std::to_string(radius) +
                                  " lies outside the trapping-model range (0, 1)");
    rep.rows.push_back(row);
  }
  if (fits.size() < 2) rep.warnings.push_back("single radius: trend not evaluable");
  rep.positive = detail::column_trend(rep.rows, true);
  rep.negative = detail::column_trend(rep.rows, false);
  return rep;
}

}  // namespace nbsto::fitting
