#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "manifest.hpp"
#include "nbsto/core/errors.hpp"
#include "nbsto/core/waveform.hpp"
#include "nbsto/device/model.hpp"
#include "nbsto/device/protocols.hpp"
#include "nbsto/electrostatics/profile.hpp"
#include "nbsto/fitting/power_law.hpp"
#include "nbsto/io/config.hpp"
#include "nbsto/io/csv.hpp"
#include "nbsto/io/report.hpp"

namespace nbsto::cli {

inline constexpr const char* version = "0.1.0";

enum Exit { ok = 0, config_failure = 2, numeric_failure = 3, io_failure = 4 };

struct Overrides {
  std::string config_path;
  std::string out;
  std::vector<double> radius;
  int cycles = -1;
  std::optional<double> set_v, reset_v, read_v, rate, v;
  std::string format;
  bool force = false;
  unsigned long seed = 1;
  std::string input;
  // synth
  double alpha = 0.5, i0 = 1e-6, noise = 0.0, t_first = 1.0, t_last = 1e4;
  int samples = 41;
};

namespace detail {

namespace fs = std::filesystem;

inline std::string radius_tag(double a) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "r%gum", a * 1e6);
  return buf;
}

inline std::string volt_tag(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+gV", v);
  return buf;
}

/// Applies command-line overrides to the raw JSON before parsing so the
/// hashed configuration is the one actually run.
inline void apply_overrides(nlohmann::json& j, const std::string& cmd, const Overrides& o) {
  auto& proto = j["protocol"];
  if (!o.radius.empty()) {
    if (cmd == "field-map") proto["field_map"]["radii_m"] = o.radius;
    else j["geometry"]["radii_m"] = o.radius;
  }
  if (o.cycles >= 0) {
    if (cmd == "sweep") proto["sweep"]["cycles"] = o.cycles;
    else if (cmd == "endurance") proto["endurance"]["cycles"] = o.cycles;
    else if (cmd == "multilevel") proto["multilevel"]["repeats"] = o.cycles;
    else if (cmd == "retention" || cmd == "scaling" || cmd == "fit") proto["retention"]["conditioning_cycles"] = o.cycles;
  }
  if (o.set_v) {
    proto["sweep"]["v_hi_V"] = *o.set_v;
    proto["retention"]["set_v_V"] = *o.set_v;
    proto["endurance"]["set_v_V"] = *o.set_v;
    proto["multilevel"]["set_levels_V"] = std::vector<double>{*o.set_v};
  }
  if (o.reset_v) {
    proto["sweep"]["v_lo_V"] = *o.reset_v;
    proto["retention"]["reset_v_V"] = *o.reset_v;
    proto["endurance"]["reset_v_V"] = *o.reset_v;
    proto["multilevel"]["reset_levels_V"] = std::vector<double>{*o.reset_v};
  }
  if (o.read_v) {
    proto["retention"]["read_v_V"] = std::vector<double>{*o.read_v};
    proto["endurance"]["read_v_V"] = *o.read_v;
    proto["multilevel"]["read_v_V"] = *o.read_v;
  }
  if (o.rate) {
    proto["sweep"]["rate_V_per_s"] = *o.rate;
    proto["multilevel"]["rate_V_per_s"] = *o.rate;
  }
  if (o.v) proto["field_map"]["v_V"] = *o.v;
  if (!o.input.empty()) proto["fit"]["input"] = o.input;
  if (!o.format.empty()) j["output"]["format"] = o.format;
  if (!o.out.empty()) j["output"]["directory"] = o.out;
  if (proto.is_null()) j.erase("protocol");
}

inline nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config " + path);
  try {
    return nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw config_error(path + ": " + e.what());
  }
}

inline double edge_gain_for(const io::RunConfig& c, double radius) {
  if (c.edge_gain) return *c.edge_gain;
  const DeviceGeometry g = io::geometry_for(c, radius);
  return electrostatics::standard_profile(g, PermittivityModel::constant(c.material.eps_zero), -3.0, c.sampling)
      .enhancement;
}

inline device::DeviceState make_device(const io::RunConfig& c, double radius) {
  const DeviceGeometry g = io::geometry_for(c, radius);
  if (c.null_model) return device::new_null_device(g, c.material, c.device);
  return device::new_device(g, c.material, edge_gain_for(c, radius), c.device);
}

/// Runs `fn` for each radius on its own thread; results keep input order.
template <class Fn>
auto per_radius(const std::vector<double>& radii, Fn fn) {
  using R = decltype(fn(0.0));
  std::vector<std::future<R>> jobs;
  for (double a : radii) jobs.push_back(std::async(std::launch::async, fn, a));
  std::vector<R> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

/// Collects the files written by a run.
class Artifacts {
 public:
  Artifacts(fs::path dir, std::string format) : dir_(std::move(dir)), format_(std::move(format)) {}

  bool json() const { return format_ == "json"; }

  template <class Fn>
  void write(const std::string& name, Fn&& fn) {
    const fs::path p = dir_ / name;
    io::write_file(p.string(), std::forward<Fn>(fn));
    files_.push_back(name);
  }

  void write_json(const std::string& name, const nlohmann::json& j) {
    write(name, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
  }

  void trace(const std::string& stem, const TimeSeriesTrace& tr) {
    if (json()) write_json(stem + ".json", io::trace_json(tr));
    else write(stem + ".csv", [&](std::ostream& o) { io::write_trace(o, tr); });
  }

  void iv_trace(const std::string& stem, const device::IVTrace& tr) {
    if (json()) write_json(stem + ".json", io::iv_trace_json(tr));
    else write(stem + ".csv", [&](std::ostream& o) { io::write_iv_trace(o, tr); });
  }

  const std::vector<std::string>& files() const { return files_; }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::string format_;
  std::vector<std::string> files_;
};

struct RetentionFits {
  double radius;
  std::vector<std::pair<double, TimeSeriesTrace>> traces;  // read voltage, trace
  std::vector<fitting::PowerLawFit> fits;
};

inline RetentionFits simulate_retention(const io::RunConfig& c, double radius) {
  const auto& p = c.retention;
  device::DeviceState s = make_device(c, radius);
  if (p.conditioning_cycles > 0)
    s = device::run_endurance(s, p.conditioning_cycles, 0.3, p.set_v, p.reset_v, p.pulse_width).state;
  const std::vector<double> sched = log_schedule(p.t_first, p.t_last, static_cast<std::size_t>(p.samples));
  RetentionFits out{radius, {}, {}};
  for (double rv : p.read_v) {
    auto r = device::run_retention(s, p.set_v, rv, sched, p.pulse_width);
    out.fits.push_back(fitting::fit_power_law(r.trace));
    out.traces.emplace_back(rv, std::move(r.trace));
  }
  return out;
}

inline void emit_retention(Artifacts& art, const std::vector<RetentionFits>& all, nlohmann::json& fits_json) {
  for (const auto& r : all)
    for (std::size_t k = 0; k < r.traces.size(); ++k) {
      art.trace("retention_" + radius_tag(r.radius) + "_read" + volt_tag(r.traces[k].first), r.traces[k].second);
      fits_json.push_back(io::fit_json(r.fits[k], r.radius, r.traces[k].first));
    }
}

inline fitting::ScalingReport table_from(const std::vector<RetentionFits>& all) {
  std::map<double, fitting::BranchFits> m;
  for (const auto& r : all)
    for (std::size_t k = 0; k < r.traces.size(); ++k) {
      const double rv = r.traces[k].first;
      if (rv > 0.0) m[r.radius].positive = r.fits[k];
      else m[r.radius].negative = r.fits[k];
    }
  return fitting::scaling_table(m);
}

// ---- subcommands ----

inline nlohmann::json cmd_sweep(const io::RunConfig& c, Artifacts& art) {
  const auto& p = c.sweep;
  auto results = per_radius(c.radii, [&](double a) {
    const BiasWaveform wf = build_sweep(p.v_hi, p.v_lo, p.rate, p.cycles, p.sample_interval);
    auto r = device::run_sweep(make_device(c, a), wf);
    auto stats = device::analyze_sweep(r.state, r.trace, p.cycles, wf.duration() / p.cycles);
    return std::make_pair(std::move(r.trace), std::move(stats));
  });
  nlohmann::json summary = nlohmann::json::array();
  for (std::size_t k = 0; k < results.size(); ++k) {
    const auto& [trace, stats] = results[k];
    art.iv_trace("sweep_" + radius_tag(c.radii[k]), trace);
    bool pinched = true;
    double drift = 0.0;
    for (const auto& st : stats) {
      pinched = pinched && st.pinched;
      if (st.cycle >= 3) drift = std::max(drift, st.drift);
    }
    summary.push_back({{"radius_m", c.radii[k]}, {"cycles", p.cycles}, {"pinched", pinched},
                       {"max_drift_after_cycle_3", drift}});
  }
  return summary;
}

inline nlohmann::json cmd_retention(const io::RunConfig& c, Artifacts& art) {
  auto all = per_radius(c.radii, [&](double a) { return simulate_retention(c, a); });
  nlohmann::json fits = nlohmann::json::array();
  emit_retention(art, all, fits);
  art.write_json("fits.json", fits);
  return fits;
}

inline nlohmann::json cmd_endurance(const io::RunConfig& c, Artifacts& art) {
  const auto& p = c.endurance;
  auto results = per_radius(c.radii, [&](double a) {
    return device::run_endurance(make_device(c, a), p.cycles, p.read_v, p.set_v, p.reset_v, p.pulse_width);
  });
  nlohmann::json summary = nlohmann::json::array();
  for (std::size_t k = 0; k < results.size(); ++k) {
    const auto& r = results[k];
    const std::string stem = "endurance_" + radius_tag(c.radii[k]);
    if (art.json()) {
      art.write_json(stem + ".json", {{"radius_m", c.radii[k]}, {"lrs_A", r.lrs}, {"hrs_A", r.hrs}, {"window", r.window}});
    } else {
      art.write(stem + ".csv", [&](std::ostream& o) {
        o << "cycle,lrs_A,hrs_A,window\n";
        for (std::size_t n = 0; n < r.lrs.size(); ++n)
          o << n + 1 << ',' << io::detail::fmt(r.lrs[n]) << ',' << io::detail::fmt(r.hrs[n]) << ','
            << io::detail::fmt(r.window[n]) << '\n';
      });
    }
    summary.push_back({{"radius_m", c.radii[k]}, {"final_window", r.window.back()}});
  }
  return summary;
}

inline nlohmann::json cmd_multilevel(const io::RunConfig& c, Artifacts& art) {
  const auto& p = c.multilevel;
  auto results = per_radius(c.radii, [&](double a) {
    device::DeviceState s = make_device(c, a);
    if (p.conditioning_cycles > 0) s = device::run_endurance(s, p.conditioning_cycles, p.read_v).state;
    return device::run_multilevel(s, p.set_levels, p.reset_levels, p.repeats, p.read_v, p.rate);
  });
  nlohmann::json summary = nlohmann::json::array();
  for (std::size_t k = 0; k < results.size(); ++k) {
    const std::string stem = "multilevel_" + radius_tag(c.radii[k]);
    nlohmann::json bands = nlohmann::json::array();
    for (const auto& b : results[k].bands)
      bands.push_back({{"set_v_V", b.set_v}, {"reset_v_V", b.reset_v}, {"mean_A", b.mean}, {"stddev_A", b.stddev},
                       {"reads_A", b.reads}});
    if (art.json()) {
      art.write_json(stem + ".json", {{"radius_m", c.radii[k]}, {"bands", bands}});
    } else {
      art.write(stem + ".csv", [&](std::ostream& o) {
        o << "set_v_V,reset_v_V,repeat,i_A\n";
        for (const auto& b : results[k].bands)
          for (std::size_t n = 0; n < b.reads.size(); ++n)
            o << io::detail::fmt(b.set_v) << ',' << io::detail::fmt(b.reset_v) << ',' << n + 1 << ','
              << io::detail::fmt(b.reads[n]) << '\n';
      });
    }
    for (auto& b : bands) b.erase("reads_A");
    summary.push_back({{"radius_m", c.radii[k]}, {"bands", bands}});
  }
  return summary;
}

inline nlohmann::json cmd_field_map(const io::RunConfig& c, Artifacts& art) {
  const auto& p = c.field_map;
  std::vector<double> radii = p.radii;
  std::sort(radii.begin(), radii.end(), std::greater<>());
  const PermittivityModel perm =
      p.constant_permittivity ? PermittivityModel::constant(c.material.eps_zero) : PermittivityModel::from(c.material);
  auto results = per_radius(radii, [&](double a) {
    const DeviceGeometry g = io::geometry_for(c, a);
    DeviceGeometry solved = g;
    solved.substrate_thickness = c.sampling.thickness(a, g.substrate_thickness);
    const auto mesh = electrostatics::make_mesh(c.sampling.spec(g));
    auto field = electrostatics::solve(solved, perm, p.v, mesh, c.sampling.solver);
    auto prof = electrostatics::interface_profile(field, c.sampling.depth(a));
    return std::make_pair(std::move(prof), p.export_grid ? std::optional(std::move(field)) : std::nullopt);
  });
  nlohmann::json summary = nlohmann::json::array();
  for (const auto& [prof, field] : results) {
    const std::string tag = radius_tag(prof.radius);
    if (art.json()) {
      art.write_json("profile_" + tag + ".json",
                     {{"radius_m", prof.radius}, {"depth_m", prof.depth}, {"r_m", prof.r}, {"e_z_V_per_m", prof.e_z}});
    } else {
      art.write("profile_" + tag + ".csv", [&](std::ostream& o) { io::write_profile(o, prof); });
    }
    if (field) art.write("field_" + tag + ".csv", [&](std::ostream& o) { io::write_field_grid(o, *field); });
    summary.push_back(io::profile_summary_json(prof));
  }
  art.write_json("profiles.json", summary);
  return summary;
}

inline nlohmann::json cmd_fit(const io::RunConfig& c, Artifacts& art) {
  if (!c.fit_input.empty()) {
    const TimeSeriesTrace tr = io::ingest_trace(c.fit_input);
    const double rv = tr.empty() ? 0.0 : tr[0].v;
    const auto fit = fitting::fit_power_law(tr);
    nlohmann::json j = io::fit_json(fit, tr.meta().radius, rv);
    j["input"] = c.fit_input;
    art.write_json("fit.json", j);
    return j;
  }
  auto all = per_radius(c.radii, [&](double a) { return simulate_retention(c, a); });
  nlohmann::json fits = nlohmann::json::array();
  emit_retention(art, all, fits);
  const nlohmann::json table = io::scaling_json(table_from(all));
  art.write_json("fits.json", fits);
  art.write_json("table.json", table);
  return table;
}

inline nlohmann::json cmd_scaling(const io::RunConfig& c, Artifacts& art) {
  const auto& e = c.endurance;
  struct Row {
    double radius, gain, window, null_window;
    RetentionFits retention;
  };
  auto rows = per_radius(c.radii, [&](double a) {
    io::RunConfig solved = c;
    solved.null_model = false;
    const double gain = edge_gain_for(c, a);
    solved.edge_gain = gain;
    const auto sim = device::run_endurance(make_device(solved, a), e.cycles, e.read_v, e.set_v, e.reset_v, e.pulse_width);
    io::RunConfig null_cfg = c;
    null_cfg.null_model = true;
    const auto ctl = device::run_endurance(make_device(null_cfg, a), e.cycles, e.read_v, e.set_v, e.reset_v, e.pulse_width);
    return Row{a, gain, sim.window.back(), ctl.window.back(), simulate_retention(solved, a)};
  });
  nlohmann::json windows = nlohmann::json::array();
  std::vector<RetentionFits> all;
  for (const auto& r : rows) {
    windows.push_back({{"radius_m", r.radius}, {"edge_gain", r.gain}, {"window", r.window}, {"null_window", r.null_window}});
    all.push_back(r.retention);
  }
  nlohmann::json fits = nlohmann::json::array();
  emit_retention(art, all, fits);
  nlohmann::json out{{"windows", windows}, {"fits", fits}, {"table", io::scaling_json(table_from(all))}};
  art.write_json("scaling.json", out);
  return out;
}

inline nlohmann::json cmd_synth(const Overrides& o, Artifacts& art) {
  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto t = log_schedule(o.t_first, o.t_last, static_cast<std::size_t>(o.samples));
  TimeSeriesTrace tr;
  for (double tk : t) tr.push_back({tk, 0.3, o.i0 * std::pow(tk, -o.alpha) * (1.0 + o.noise * gauss(rng))});
  art.trace("synthetic", tr);
  return {{"alpha", o.alpha}, {"i0", o.i0}, {"noise", o.noise}, {"seed", o.seed}};
}

inline fs::path prepare_out_dir(const std::string& dir, bool force) {
  const fs::path p(dir);
  std::error_code ec;
  if (fs::exists(p, ec)) {
    if (!fs::is_directory(p, ec)) throw io_error(dir + " exists and is not a directory");
    if (!fs::is_empty(p, ec) && !force) throw io_error(dir + " already exists; use --force to overwrite");
  }
  fs::create_directories(p, ec);
  if (ec) throw io_error("cannot create " + dir + ": " + ec.message());
  return p;
}

}  // namespace detail

/// Parses arguments and runs one subcommand. Returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& err = std::cerr) {
  CLI::App app{"Two-zone memristor simulator: sweeps, retention, endurance, multilevel, field maps and fits"};
  app.set_version_flag("--version", version);
  app.require_subcommand(1);
  Overrides o;

  const std::vector<std::pair<std::string, std::string>> commands{
      {"sweep", "Repeated +V/-V current-voltage sweeps"},
      {"retention", "Write pulse then a constant read, with power-law fits"},
      {"endurance", "Alternating SET/RESET pulses with reads"},
      {"multilevel", "Sweeps over SET x RESET voltage pairs"},
      {"field-map", "Interface field profiles from the axisymmetric solver"},
      {"fit", "Power-law fit of an input trace, or of simulated retention"},
      {"scaling", "Memory windows and exponents against radius"},
      {"synth", "Synthetic power-law trace for fitter checks"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config_path, "JSON run configuration");
    sub->add_option("--out", o.out, "Output directory (one per run)");
    sub->add_option("--radius,--radii", o.radius, "Electrode radii in m")->delimiter(',');
    sub->add_option("--cycles", o.cycles, "Cycles (sweep, endurance) or repeats (multilevel)");
    sub->add_option("--set-v", o.set_v, "SET voltage");
    sub->add_option("--reset-v", o.reset_v, "RESET voltage");
    sub->add_option("--read-v", o.read_v, "Read voltage");
    sub->add_option("--rate", o.rate, "Sweep rate in V/s");
    sub->add_option("--format", o.format, "Trace format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_flag("--force", o.force, "Overwrite an existing output directory");
    sub->add_option("--seed", o.seed, "Seed for synthetic-data noise");
    if (name == "field-map") sub->add_option("--v", o.v, "Applied voltage");
    if (name == "fit") sub->add_option("--input", o.input, "Trace CSV with header t_s,v_V,i_A");
    if (name == "synth") {
      sub->add_option("--alpha", o.alpha);
      sub->add_option("--i0", o.i0);
      sub->add_option("--noise", o.noise, "Relative Gaussian noise");
      sub->add_option("--samples", o.samples);
      sub->add_option("--t-first", o.t_first);
      sub->add_option("--t-last", o.t_last);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return config_failure;
  }
  std::string cmd;
  for (const auto* sub : app.get_subcommands()) cmd = sub->get_name();

  const auto t_start = std::chrono::steady_clock::now();
  try {
    nlohmann::json raw = o.config_path.empty() ? nlohmann::json::object() : detail::read_json(o.config_path);
    detail::apply_overrides(raw, cmd, o);
    const io::RunConfig cfg = [&] {
      try {
        io::RunConfig c = io::parse_config(raw);
        io::validate(c);
        return c;
      } catch (const parameter_error& e) {
        throw config_error(e.what());
      }
    }();
    if (cmd == "synth" && !(o.samples >= 2 && o.t_first > 0.0 && o.t_last > o.t_first && o.noise >= 0.0))
      throw config_error("synth: need samples >= 2, 0 < t_first < t_last, noise >= 0");

    detail::Artifacts art(detail::prepare_out_dir(cfg.output_directory, o.force), cfg.output_format);
    nlohmann::json summary;
    if (cmd == "sweep") summary = detail::cmd_sweep(cfg, art);
    else if (cmd == "retention") summary = detail::cmd_retention(cfg, art);
    else if (cmd == "endurance") summary = detail::cmd_endurance(cfg, art);
    else if (cmd == "multilevel") summary = detail::cmd_multilevel(cfg, art);
    else if (cmd == "field-map") summary = detail::cmd_field_map(cfg, art);
    else if (cmd == "fit") summary = detail::cmd_fit(cfg, art);
    else if (cmd == "scaling") summary = detail::cmd_scaling(cfg, art);
    else if (cmd == "synth") summary = detail::cmd_synth(o, art);

    nlohmann::json files = nlohmann::json::array();
    for (const auto& f : art.files()) files.push_back({{"file", f}, {"sha256", sha256_file((art.dir() / f).string())}});
    // output location does not change the hash
    nlohmann::json hashed = raw;
    if (hashed.contains("output")) {
      hashed["output"].erase("directory");
      if (hashed["output"].empty()) hashed.erase("output");
    }
    const nlohmann::json manifest{
        {"subcommand", cmd},
        {"version", version},
        {"compiler", __VERSION__},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION)},
        {"config", raw},
        {"config_sha256", sha256_hex(hashed.dump())},
        {"seed", o.seed},
        {"artifacts", files},
        {"summary", summary},
        {"wall_time_s", std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count()}};
    io::write_file((art.dir() / "manifest.json").string(), [&](std::ostream& out) { out << manifest.dump(2) << '\n'; });
    return ok;
  } catch (const config_error& e) {
    err << "config error: " << e.what() << '\n';
    return config_failure;
  } catch (const io_error& e) {
    err << "I/O error: " << e.what() << '\n';
    return io_failure;
  } catch (const numerical_error& e) {
    err << "numerical failure: " << e.what() << '\n';
    if (!e.history().empty()) err << "  last residual: " << e.history().back() << '\n';
    return numeric_failure;
  } catch (const parameter_error& e) {
    err << "invalid parameter: " << e.what() << '\n';
    return config_failure;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << '\n';
    return numeric_failure;
  }
}

}  // namespace nbsto::cli
