#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "nbsto/core/errors.hpp"

namespace nbsto::fitting {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Residual vector r(p); the fit minimizes 0.5 * |r|^2.
using ResidualFn = std::function<Vector(const Vector&)>;

/// Optional projection onto the feasible set. Returns true if it moved `p`.
using ProjectFn = std::function<bool(Vector&)>;

enum class LmStatus { cost_converged, gradient_converged, iteration_cap };

inline std::string to_string(LmStatus s) {
  switch (s) {
    case LmStatus::cost_converged: return "cost_converged";
    case LmStatus::gradient_converged: return "gradient_converged";
    case LmStatus::iteration_cap: return "iteration_cap";
  }
  return "unknown";
}

struct LmOptions {
  int max_iterations = 200;
  double cost_tol = 1e-12;      // relative change of the cost
  double gradient_tol = 1e-12;  // infinity norm of J^T r
  double step_rel = 1e-6;       // central-difference step / max(|p_j|, scale_j)
  double lambda0 = 1e-3;
  double lambda_max = 1e16;
  std::vector<double> scale;    // typical magnitude per parameter, default 1
};

struct LmResult {
  Vector params;
  Matrix covariance;
  Vector stderr_;
  LmStatus status = LmStatus::iteration_cap;
  int iterations = 0;
  double cost = 0.0;          // 0.5 * |r|^2
  std::size_t residuals = 0;
  bool projected = false;     // some iterate was pulled back onto the feasible set
  std::vector<double> cost_history;

  bool converged() const { return status != LmStatus::iteration_cap; }
};

inline Matrix numeric_jacobian(const ResidualFn& f, const Vector& p, const LmOptions& opt, const ProjectFn& project) {
  const Eigen::Index k = p.size();
  Matrix jac;
  for (Eigen::Index j = 0; j < k; ++j) {
    const double scale = static_cast<std::size_t>(j) < opt.scale.size() ? opt.scale[j] : 1.0;
    const double h = opt.step_rel * std::max(std::abs(p[j]), scale);
    Vector hi = p, lo = p;
    hi[j] += h;
    lo[j] -= h;
    // one-sided near a constraint
    Vector hi_p = hi;
    const bool hit = project && project(hi_p);
    const Vector rh = f(hit ? p : hi);
    const Vector rl = f(lo);
    const double span = hit ? h : 2.0 * h;
    if (jac.size() == 0) jac.resize(rh.size(), k);
    jac.col(j) = (rh - rl) / span;
  }
  return jac;
}

/// Levenberg-Marquardt with Marquardt diagonal scaling and a central
/// difference Jacobian. Parameter standard errors come from
/// s^2 (J^T J)^-1 at the solution, with s^2 = |r|^2 / (m - k).
inline LmResult lm_fit(const ResidualFn& f, const Vector& init, std::size_t data_points, const LmOptions& opt = {},
                       const ProjectFn& project = {}) {
  const auto k = static_cast<std::size_t>(init.size());
  if (k == 0) throw parameter_error("lm_fit: no parameters");
  if (!(data_points > k)) throw parameter_error("lm_fit: need more data points than parameters");
  for (Eigen::Index j = 0; j < init.size(); ++j)
    if (!std::isfinite(init[j])) throw parameter_error("lm_fit: initial parameters must be finite");

  LmResult out;
  Vector p = init;
  if (project && project(p)) out.projected = true;
  Vector r = f(p);
  if (static_cast<std::size_t>(r.size()) != data_points)
    throw parameter_error("lm_fit: residual length does not match data_points");
  if (!r.allFinite()) throw fit_error("lm_fit: residuals not finite at the initial point");
  double cost = 0.5 * r.squaredNorm();
  out.cost_history.push_back(cost);
  double lambda = opt.lambda0;
  Matrix jac = numeric_jacobian(f, p, opt, project);

  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    const Vector g = jac.transpose() * r;
    if (g.lpNorm<Eigen::Infinity>() < opt.gradient_tol) {
      out.status = LmStatus::gradient_converged;
      break;
    }
    const Matrix jtj = jac.transpose() * jac;
    Vector diag = jtj.diagonal();
    const double dmax = std::max(diag.maxCoeff(), 1e-300);
    for (Eigen::Index j = 0; j < diag.size(); ++j) diag[j] = std::max(diag[j], 1e-12 * dmax);

    bool accepted = false;
    double new_cost = cost;
    Vector p_new, r_new;
    while (lambda <= opt.lambda_max) {
      Matrix a = jtj;
      a.diagonal() += lambda * diag;
      Eigen::LDLT<Matrix> ldlt(a);
      Vector delta;
      if (ldlt.info() == Eigen::Success && ldlt.isPositive()) delta = ldlt.solve(-g);
      if (delta.size() == 0 || !delta.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      p_new = p + delta;
      if (project && project(p_new)) out.projected = true;
      r_new = f(p_new);
      new_cost = r_new.allFinite() ? 0.5 * r_new.squaredNorm() : std::numeric_limits<double>::infinity();
      if (new_cost <= cost) {
        accepted = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      // no descent at the largest damping: at a minimum to working precision
      if (g.lpNorm<Eigen::Infinity>() <= 1e-8 * std::max(1.0, cost) || cost == 0.0) {
        out.status = LmStatus::cost_converged;
        break;
      }
      out.params = p;
      throw fit_error("lm_fit: no descent direction at maximum damping", out.cost_history);
    }
    const double rel = std::abs(cost - new_cost) / std::max(cost, 1e-300);
    p = p_new;
    r = r_new;
    cost = new_cost;
    out.cost_history.push_back(cost);
    lambda = std::max(lambda / 10.0, 1e-12);
    jac = numeric_jacobian(f, p, opt, project);
    if (rel < opt.cost_tol || cost == 0.0) {
      out.status = LmStatus::cost_converged;
      ++it;
      break;
    }
  }
  if (it >= opt.max_iterations) out.status = LmStatus::iteration_cap;

  out.params = p;
  out.iterations = it;
  out.cost = cost;
  out.residuals = data_points;
  const double s2 = 2.0 * cost / static_cast<double>(data_points - k);
  const Matrix jtj = jac.transpose() * jac;
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(jtj);
  out.covariance = s2 * cod.pseudoInverse();
  out.stderr_.resize(static_cast<Eigen::Index>(k));
  for (std::size_t j = 0; j < k; ++j)
    out.stderr_[static_cast<Eigen::Index>(j)] =
        std::sqrt(std::max(0.0, out.covariance(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j))));
  return out;
}

}  // namespace nbsto::fitting
