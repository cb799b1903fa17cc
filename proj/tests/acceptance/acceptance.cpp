// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "cli.hpp"
#include "nbsto/core/waveform.hpp"
#include "nbsto/device/protocols.hpp"
#include "nbsto/electrostatics/profile.hpp"
#include "nbsto/electrostatics/solver.hpp"
#include "nbsto/fitting/power_law.hpp"
#include "nbsto/io/config.hpp"
#include "nbsto/trapping.hpp"

using namespace nbsto;
namespace es = nbsto::electrostatics;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

constexpr double eps_r = 300.0;

TrapParams params_for_beta(double beta) {
  TrapParams p;
  p.x_centroid = beta * p.e0_scale * eps_r * constants::vacuum_permittivity /
                 (p.capacity() * constants::elementary_charge);
  return p;
}

LogLogFit late_decay(double e_ap, const TrapParams& p, std::size_t samples) {
  const auto probe = simulate_constant_bias(e_ap, p, eps_r, 1.0, 2);
  const double t_end = probe.t_onset * 1e8;
  const auto r = simulate_constant_bias(e_ap, p, eps_r, t_end, samples);
  return fit_log_log(r.trace, probe.t_onset * 1e4, t_end);
}

io::RunConfig shipped_config() {
  return io::load_config((std::filesystem::path(NBSTO_SOURCE_DIR) / "configs" / "default.json").string());
}

Outcome closed_form_kinetics() {
  const TrapParams p;
  const double j = 1.0;
  const double t_star = p.q_star() / j;
  const auto times = log_schedule(1e-3 * t_star, 1e3 * t_star, 61);
  const auto n = integrate_constant_injection(j, p, times);
  double worst = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double exact = trapped_density(j * times[k], p);
    worst = std::max(worst, std::abs(n[k] - exact) / exact);
  }
  return {worst < 1e-6, fmt("max relative error %.2e over Q/Q* in [1e-3, 1e3]", worst)};
}

Outcome exponent_law() {
  bool ok = true;
  std::string d;
  for (double beta : {0.25, 1.0, 4.0}) {
    const double expected = beta / (1.0 + beta);
    const double got = late_decay(2e9, params_for_beta(beta), 120).alpha;
    const double rel = std::abs(got - expected) / expected;
    ok = ok && rel < 0.02;
    d += fmt("beta=%g alpha=%.4f (target %.4f, %.2f%%) ", beta, got, expected, 100 * rel);
  }
  return {ok, d};
}

Outcome js_relation() {
  const TrapParams p = params_for_beta(1.0);
  std::vector<FamilyMember> fam;
  for (double e_ap : {1.0e9, 1.5e9, 2.0e9, 2.5e9, 3.0e9, 3.5e9}) {
    const auto fit = late_decay(e_ap, p, 100);
    fam.push_back({e_ap, std::exp(fit.ln_js), fit.alpha});
  }
  const auto rel = j_s_relation_check(fam);
  return {rel.r2 > 0.99, fmt("%zu fields, R^2 = %.6f, slope m = %.3e m/V", fam.size(), rel.r2, rel.m_coeff)};
}

Outcome electrostatic_controls() {
  DeviceGeometry plate;
  plate.radius = 1e-4;
  plate.electrode_coverage = 1.0;
  const auto mesh = es::make_uniform_mesh(2e-4, 0.5e-3, 11, 41);
  const auto f = es::solve(plate, PermittivityModel::constant(eps_r), -3.0, mesh);
  double worst_plate = 0.0;
  for (std::size_t j = 0; j < mesh.nz(); ++j)
    for (std::size_t i = 0; i < mesh.nr(); ++i)
      worst_plate = std::max(worst_plate, std::abs(es::field_z(f, i, j) - 6000.0) / 6000.0);

  const es::SamplingRule rule;
  auto disc = [&](double a, double v) {
    const DeviceGeometry g = es::study_geometry(a);
    DeviceGeometry solved = g;
    solved.substrate_thickness = rule.thickness(a, g.substrate_thickness);
    return es::solve(solved, PermittivityModel::constant(eps_r), v, es::make_mesh(rule.spec(g)), rule.solver);
  };
  const auto a = disc(1e-5, -1.25), b = disc(1e-5, 0.5), ab = disc(1e-5, -0.75), neg = disc(1e-5, 1.25);
  double sup = 0.0, anti = 0.0;
  for (std::size_t k = 0; k < ab.phi.size(); ++k) {
    sup = std::max(sup, std::abs(a.phi[k] + b.phi[k] - ab.phi[k]));
    anti = std::max(anti, std::abs(a.phi[k] + neg.phi[k]));
  }
  double flux = f.flux_imbalance();
  for (double r : {1e-6, 1e-5, 1e-4}) flux = std::max(flux, disc(r, -3.0).flux_imbalance());
  const double tol = rule.solver.tol;
  const bool ok = worst_plate < 5e-3 && sup <= tol && anti <= tol && flux < 5e-3;
  return {ok, fmt("plate error %.1e, superposition %.1e V, antisymmetry %.1e V (tol %.0e V), flux imbalance %.2e",
                  worst_plate, sup, anti, tol, flux)};
}

Outcome edge_enhancement() {
  const auto perm = PermittivityModel::constant(eps_r);
  const auto ps = es::radius_study({1e-4, 1e-5, 1e-6}, perm, -3.0);
  const double ref[3] = {3e5, 2e6, 2e7};
  bool ok = ps[0].e_max < ps[1].e_max && ps[1].e_max < ps[2].e_max;
  std::string d;
  for (int k = 0; k < 3; ++k) {
    const double ratio = ps[k].e_max / ref[k];
    ok = ok && ratio > 0.5 && ratio < 2.0;
    d += fmt("a=%gum e_max=%.3e (x%.2f) ", ps[k].radius * 1e6, ps[k].e_max, ratio);
  }
  const auto small = es::radius_study({100e-9, 50e-9, 10e-9}, perm, -3.0);
  const double up1 = small[1].e_max / small[0].e_max - 1.0, up2 = small[2].e_max / small[1].e_max - 1.0;
  ok = ok && up1 > 0.0 && up2 < up1;
  d += fmt("| rise 100->50 nm %.1f%%, 50->10 nm %.1f%%", 100 * up1, 100 * up2);
  return {ok, d};
}

Outcome power_law_fitter() {
  auto trace = [](double noise, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    TimeSeriesTrace tr;
    for (double t : log_schedule(1e-3, 1e2, 41)) tr.push_back({t, 0.3, 2e-7 * std::pow(t, -0.5) * (1.0 + noise * gauss(rng))});
    return tr;
  };
  const double clean = fitting::fit_power_law(trace(0.0, 0)).alpha;
  int inside = 0;
  for (unsigned seed = 1; seed <= 100; ++seed) {
    const auto fit = fitting::fit_power_law(trace(0.02, seed));
    if (std::abs(fit.alpha - 0.5) <= 3.0 * fit.stderr_alpha) ++inside;
  }
  const double err = std::abs(clean - 0.5);
  return {err < 1e-6 && inside >= 95, fmt("noiseless |alpha-0.5| = %.1e, 2%% noise coverage %d/100", err, inside)};
}

Outcome table_trend() {
  const io::RunConfig c = shipped_config();
  std::vector<double> radii{1e-6, 1e-5, 1e-4};
  const auto all = cli::detail::per_radius(radii, [&](double a) { return cli::detail::simulate_retention(c, a); });
  const auto rep = cli::detail::table_from(all);
  std::vector<double> alpha;
  for (const auto& row : rep.rows) alpha.push_back(row.alpha_positive.value_or(0.0));
  const bool ordered = rep.positive == fitting::Trend::decreasing_with_radius;
  const double ratio = alpha.back() > 0.0 ? alpha.front() / alpha.back() : INFINITY;
  return {ordered && ratio > 5.0,
          fmt("|alpha| at +0.3 V: 1um %.4f, 10um %.4f, 100um %.4f; ratio %.1f; -0.5 V trend: %s", alpha[0], alpha[1],
              alpha[2], ratio, fitting::to_string(rep.negative).c_str())};
}

Outcome memory_window_anomaly() {
  const io::RunConfig c = shipped_config();
  const auto& e = c.endurance;
  std::vector<double> radii{1e-6, 1e-5, 1e-4}, win, null_win, gains;
  for (double a : radii) {
    const DeviceGeometry g = io::geometry_for(c, a);
    const double gain = es::standard_profile(g, PermittivityModel::constant(c.material.eps_zero), -3.0, c.sampling)
                            .enhancement;
    gains.push_back(gain);
    win.push_back(device::run_endurance(device::new_device(g, c.material, gain, c.device), e.cycles, e.read_v,
                                        e.set_v, e.reset_v, e.pulse_width)
                      .window.back());
    null_win.push_back(device::run_endurance(device::new_null_device(g, c.material, c.device), e.cycles, e.read_v,
                                             e.set_v, e.reset_v, e.pulse_width)
                           .window.back());
  }
  auto spread = [](const std::vector<double>& v) {
    return *std::max_element(v.begin(), v.end()) / *std::min_element(v.begin(), v.end()) - 1.0;
  };
  // the null device's pulse window is flat; its slow-sweep hysteresis per unit
  // area is a second, non-degenerate area-independence check
  std::vector<double> null_loop;
  const auto wf = build_sweep(c.sweep.v_hi, c.sweep.v_lo, c.sweep.rate, 2, c.sweep.sample_interval);
  for (double a : radii) {
    const auto s = device::new_null_device(io::geometry_for(c, a), c.material, c.device);
    const auto r = device::run_sweep(s, wf);
    null_loop.push_back(device::analyze_sweep(r.state, r.trace, 2, wf.duration() / 2).back().loop_area / s.area());
  }
  const bool ok = win[0] > win[1] && win[1] > win[2] && spread(null_win) < 0.01 && null_loop[0] > 0.0 &&
                  spread(null_loop) < 0.01;
  return {ok, fmt("gains %.2f/%.2f/%.2f, windows %.4f > %.4f > %.4f; null windows %.6f/%.6f/%.6f (spread %.1e); "
                  "null sweep loop area %.3e W/m^2 (spread %.1e)",
                  gains[0], gains[1], gains[2], win[0], win[1], win[2], null_win[0], null_win[1], null_win[2],
                  spread(null_win), null_loop[0], spread(null_loop))};
}

Outcome protocol_fidelity() {
  const io::RunConfig c = shipped_config();
  const DeviceGeometry g = io::geometry_for(c, 1e-6);
  const double gain = es::standard_profile(g, PermittivityModel::constant(c.material.eps_zero), -3.0, c.sampling)
                          .enhancement;
  const auto& sw = c.sweep;
  const int cycles = 1000;
  const auto wf = build_sweep(sw.v_hi, sw.v_lo, sw.rate, cycles, sw.sample_interval);
  const auto r = device::run_sweep(device::new_device(g, c.material, gain, c.device), wf);
  const auto stats = device::analyze_sweep(r.state, r.trace, cycles, wf.duration() / cycles);
  int unpinched = 0;
  double drift = 0.0;
  for (const auto& s : stats) {
    if (!s.pinched || !(s.loop_area > 0.0)) ++unpinched;
    if (s.cycle >= 3) drift = std::max(drift, s.drift);
  }

  const auto& ml = c.multilevel;
  auto s = device::new_device(g, c.material, gain, c.device);
  s = device::run_endurance(s, ml.conditioning_cycles, ml.read_v).state;
  auto bands = device::run_multilevel(s, {1.0, 2.0}, {-2.0, -2.5, -3.0}, 100, ml.read_v, ml.rate).bands;
  std::sort(bands.begin(), bands.end(), [](const auto& x, const auto& y) { return x.mean < y.mean; });
  double worst = INFINITY;
  for (std::size_t k = 1; k < bands.size(); ++k) {
    const double sd = std::max(bands[k].stddev, bands[k - 1].stddev);
    worst = std::min(worst, (bands[k].mean - bands[k - 1].mean) / (3.0 * sd));
  }
  const bool ok = unpinched == 0 && drift < 0.05 && bands.size() == 6 && worst > 1.0;
  return {ok, fmt("%d cycles, %d not pinched, max drift after cycle 3 %.2e; %zu bands, min separation / (3 sd) %.2f",
                  cycles, unpinched, drift, bands.size(), worst)};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // 0 means no runtime bound
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "closed-form kinetics", 1.0, closed_form_kinetics},
      {2, "exponent law", 10.0, exponent_law},
      {3, "J_s relation", 30.0, js_relation},
      {4, "electrostatics controls", 0.0, electrostatic_controls},
      {5, "edge enhancement", 600.0, edge_enhancement},
      {6, "power-law fitter", 60.0, power_law_fitter},
      {7, "exponent trend", 300.0, table_trend},
      {8, "memory-window anomaly", 300.0, memory_window_anomaly},
      {9, "protocol fidelity", 600.0, protocol_fidelity},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.budget_s == 0.0 || dt < c.budget_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::printf("%s [%d] %s: %s | %.2f s%s\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), dt,
                in_time ? "" : fmt(" (budget %.0f s exceeded)", c.budget_s).c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
