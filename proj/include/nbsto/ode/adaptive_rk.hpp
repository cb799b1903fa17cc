#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "nbsto/core/errors.hpp"

namespace nbsto::ode {

struct StepDoublingOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-14;
  double h_init = 0.0;  // 0 picks a fraction of the interval
  double h_min = 1e-300;
  long max_steps = 10'000'000;
};

struct IntegrationStats {
  long accepted = 0;
  long rejected = 0;
};

/// Classical RK4 with step-doubling error control and local Richardson
/// extrapolation. State is a fixed-size array; `rhs(t, y) -> dy/dt`.
template <std::size_t N>
class StepDoublingRk4 {
 public:
  using state_type = std::array<double, N>;

  explicit StepDoublingRk4(StepDoublingOptions opt = {}) : opt_(opt) {}

  const IntegrationStats& stats() const noexcept { return stats_; }

  /// Advances `y` from `t` to `t_end` in place. On underflow of the step
  /// size the exception carries the last accepted state.
  template <class Rhs>
  void advance(Rhs&& rhs, double& t, state_type& y, double t_end) {
    if (!(t_end > t)) return;
    double h = h_ > 0.0 ? h_ : (opt_.h_init > 0.0 ? opt_.h_init : (t_end - t) * 1e-3);
    while (t < t_end) {
      if (stats_.accepted + stats_.rejected > opt_.max_steps)
        throw numerical_error("rk4: step budget exhausted at t=" + std::to_string(t), history(t, y));
      const bool last = t + h >= t_end;
      const double step = last ? t_end - t : h;
      state_type full = rk4(rhs, t, y, step);
      state_type half = rk4(rhs, t, y, 0.5 * step);
      half = rk4(rhs, t + 0.5 * step, half, 0.5 * step);

      double err = 0.0;
      for (std::size_t i = 0; i < N; ++i) {
        const double scale = opt_.abs_tol + opt_.rel_tol * std::max(std::abs(y[i]), std::abs(half[i]));
        err = std::max(err, std::abs(half[i] - full[i]) / (15.0 * scale));
      }
      if (!std::isfinite(err)) err = 1e10;

      if (err <= 1.0) {
        for (std::size_t i = 0; i < N; ++i) y[i] = half[i] + (half[i] - full[i]) / 15.0;
        t = last ? t_end : t + step;
        ++stats_.accepted;
        const double grow = err > 0.0 ? std::min(4.0, 0.9 * std::pow(err, -0.2)) : 4.0;
        // a truncated final step says nothing about the natural step size
        if (!last) h = step * grow;
      } else {
        ++stats_.rejected;
        h = step * std::max(0.1, 0.9 * std::pow(err, -0.2));
        if (h < opt_.h_min || t + h == t)
          throw numerical_error("rk4: step size underflow at t=" + std::to_string(t), history(t, y));
      }
    }
    h_ = h;
  }

 private:
  template <class Rhs>
  static state_type rk4(Rhs& rhs, double t, const state_type& y, double h) {
    state_type k1 = rhs(t, y), tmp{};
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    state_type k2 = rhs(t + 0.5 * h, tmp);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
    state_type k3 = rhs(t + 0.5 * h, tmp);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * k3[i];
    state_type k4 = rhs(t + h, tmp);
    state_type out{};
    for (std::size_t i = 0; i < N; ++i) out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
  }

  static std::vector<double> history(double t, const state_type& y) {
    std::vector<double> h{t};
    h.insert(h.end(), y.begin(), y.end());
    return h;
  }

  StepDoublingOptions opt_;
  IntegrationStats stats_{};
  double h_ = 0.0;
};

}  // namespace nbsto::ode
