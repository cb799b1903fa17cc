#pragma once

#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "nbsto/core/errors.hpp"
#include "nbsto/core/params.hpp"
#include "nbsto/device/model.hpp"
#include "nbsto/electrostatics/profile.hpp"

namespace nbsto::io {

struct SweepProtocol {
  double v_hi = 2.0;             // V
  double v_lo = -3.0;            // V
  double rate = 1.52;            // V/s
  int cycles = 10;
  double sample_interval = 0.01; // s
};

struct RetentionProtocol {
  double set_v = 2.0;
  double pulse_width = 1e-3;               // s
  std::vector<double> read_v{0.3, -0.5};  // V, one hold per read voltage
  double t_first = 1e-3;                   // s after the write pulse
  double t_last = 1e2;
  int samples = 41;
  int conditioning_cycles = 12;            // SET/RESET pulse pairs before the write
  double reset_v = -3.0;
};

struct EnduranceProtocol {
  int cycles = 100;
  double set_v = 2.0;
  double reset_v = -3.0;
  double read_v = 0.3;
  double pulse_width = 1e-3;
};

struct MultilevelProtocol {
  std::vector<double> set_levels{1.0, 2.0};
  std::vector<double> reset_levels{-2.0, -2.5, -3.0};
  int repeats = 100;
  double read_v = 0.3;
  double rate = 1.52;
  int conditioning_cycles = 5;
};

struct FieldMapProtocol {
  double v = -3.0;
  std::vector<double> radii{1e-4, 1e-5, 1e-6};
  bool constant_permittivity = true;
  bool export_grid = false;
};

struct RunConfig {
  MaterialParams material{};
  DeviceGeometry geometry{};          // radius is replaced per run
  std::vector<double> radii{1e-6, 1e-5, 1e-4};
  device::DeviceConfig device{};
  electrostatics::SamplingRule sampling{};
  std::optional<double> edge_gain;    // fixed gain instead of a field solve
  bool null_model = false;
  SweepProtocol sweep{};
  RetentionProtocol retention{};
  EnduranceProtocol endurance{};
  MultilevelProtocol multilevel{};
  FieldMapProtocol field_map{};
  std::string fit_input;
  std::string output_directory = "runs";
  std::string output_format = "csv";
};

namespace detail {

/// Reads keys from one JSON object and rejects any it did not ask for.
class Section {
 public:
  Section(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw config_error(path_ + ": expected an object");
  }

  template <class T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw config_error(path_ + "." + key + ": wrong type");
    }
  }

  std::optional<Section> sub(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) return std::nullopt;
    return Section(j_.at(key), path_ + "." + key);
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  const nlohmann::json& at(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw config_error(path_ + ": unknown key '" + it.key() + "'");
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& root) {
  RunConfig c;
  detail::Section top(root, "config");
  if (auto s = top.sub("material")) {
    auto& m = c.material;
    s->get("eps_zero", m.eps_zero);
    s->get("eps_field_scale_V_per_m", m.eps_field_scale);
    s->get("barrier_height_eV", m.barrier_height);
    s->get("ideality", m.ideality);
    s->get("donor_density_m3", m.donor_density);
    s->get("richardson_const", m.richardson_const);
    s->get("temperature_K", m.temperature);
    s->get("conduction_dos_m3", m.conduction_dos);
    s->finish();
  }
  if (auto s = top.sub("geometry")) {
    s->get("radii_m", c.radii);
    s->get("substrate_thickness_m", c.geometry.substrate_thickness);
    s->get("edge_zone_width_m", c.geometry.edge_zone_width);
    s->get("electrode_coverage", c.geometry.electrode_coverage);
    s->finish();
  }
  if (auto s = top.sub("trapping")) {
    auto& t = c.material.trap;
    s->get("n0_m3", t.n0_max);
    s->get("sigma_m2", t.sigma);
    s->get("h_m3", t.h);
    s->get("x_centroid_m", t.x_centroid);
    s->get("v_th_m_per_s", t.v_th);
    s->get("v_d_m_per_s", t.v_d);
    s->get("volume_m3", t.volume);
    s->get("e0_V_per_m", t.e0_scale);
    s->get("j0_A_per_m2", t.j0_ref);
    std::string law;
    s->get("rate_law", law);
    if (law == "coulombic") c.device.rate_law.kind = RateLaw::coulombic;
    else if (law == "first_order") c.device.rate_law.kind = RateLaw::first_order;
    else if (law == "trap_generation") c.device.rate_law.kind = RateLaw::trap_generation;
    else if (!law.empty()) throw config_error("config.trapping.rate_law: unknown law '" + law + "'");
    s->finish();
  }
  if (auto s = top.sub("transport")) {
    std::string mech;
    s->get("mechanism", mech);
    if (!mech.empty()) {
      try {
        c.device.law.mechanism = mechanism_from_string(mech);
      } catch (const parameter_error& e) {
        throw config_error(std::string("config.transport.mechanism: ") + e.what());
      }
    }
    s->get("v0_V", c.device.law.v0);
    s->get("j_ref_A_per_m2", c.device.law.j_ref);
    s->get("barrier_lowering", c.device.barrier_lowering);
    s->finish();
  }
  if (auto s = top.sub("device")) {
    auto& d = c.device;
    s->get("edge_trap_boost", d.edge_trap_boost);
    s->get("detrap_rate_per_s", d.detrap_rate);
    s->get("detrap_field_V_per_m", d.detrap_field);
    s->get("series_resistance_ohm_m2", d.series_resistance);
    s->get("burn_in_fraction", d.burn_in_fraction);
    s->get("rel_tol", d.rel_tol);
    s->get("abs_tol", d.abs_tol);
    double gain = 0.0;
    if (s->has("edge_gain")) {
      s->get("edge_gain", gain);
      c.edge_gain = gain;
    }
    s->get("null_model", c.null_model);
    s->finish();
  }
  if (auto s = top.sub("solver")) {
    auto& r = c.sampling;
    s->get("depth_fraction", r.depth_fraction);
    s->get("reference_radius_m", r.reference_radius);
    s->get("small_thickness_m", r.small_thickness);
    s->get("small_min_depth_m", r.small_min_depth);
    s->get("cells_per_depth", r.cells_per_depth);
    s->get("growth", r.growth);
    s->get("inner_cap_fraction", r.inner_cap_fraction);
    s->get("domain_radius_factor", r.domain_radius_factor);
    s->get("tol_V", r.solver.tol);
    s->get("damping", r.solver.damping);
    s->get("max_iterations", r.solver.max_iterations);
    s->finish();
  }
  if (auto p = top.sub("protocol")) {
    if (auto s = p->sub("sweep")) {
      s->get("v_hi_V", c.sweep.v_hi);
      s->get("v_lo_V", c.sweep.v_lo);
      s->get("rate_V_per_s", c.sweep.rate);
      s->get("cycles", c.sweep.cycles);
      s->get("sample_interval_s", c.sweep.sample_interval);
      s->finish();
    }
    if (auto s = p->sub("retention")) {
      s->get("set_v_V", c.retention.set_v);
      s->get("reset_v_V", c.retention.reset_v);
      s->get("pulse_width_s", c.retention.pulse_width);
      s->get("read_v_V", c.retention.read_v);
      s->get("t_first_s", c.retention.t_first);
      s->get("t_last_s", c.retention.t_last);
      s->get("samples", c.retention.samples);
      s->get("conditioning_cycles", c.retention.conditioning_cycles);
      s->finish();
    }
    if (auto s = p->sub("endurance")) {
      s->get("cycles", c.endurance.cycles);
      s->get("set_v_V", c.endurance.set_v);
      s->get("reset_v_V", c.endurance.reset_v);
      s->get("read_v_V", c.endurance.read_v);
      s->get("pulse_width_s", c.endurance.pulse_width);
      s->finish();
    }
    if (auto s = p->sub("multilevel")) {
      s->get("set_levels_V", c.multilevel.set_levels);
      s->get("reset_levels_V", c.multilevel.reset_levels);
      s->get("repeats", c.multilevel.repeats);
      s->get("read_v_V", c.multilevel.read_v);
      s->get("rate_V_per_s", c.multilevel.rate);
      s->get("conditioning_cycles", c.multilevel.conditioning_cycles);
      s->finish();
    }
    if (auto s = p->sub("field_map")) {
      s->get("v_V", c.field_map.v);
      s->get("radii_m", c.field_map.radii);
      s->get("constant_permittivity", c.field_map.constant_permittivity);
      s->get("export_grid", c.field_map.export_grid);
      s->finish();
    }
    if (auto s = p->sub("fit")) {
      s->get("input", c.fit_input);
      s->finish();
    }
    p->finish();
  }
  if (auto s = top.sub("output")) {
    s->get("directory", c.output_directory);
    s->get("format", c.output_format);
    s->finish();
  }
  top.finish();
  return c;
}

/// Physical checks, reported as config errors.
inline void validate(const RunConfig& c) {
  try {
    validate(c.material);
    device::validate(c.device);
    if (c.radii.empty()) throw parameter_error("geometry: radii must be non-empty");
    for (double a : c.radii) {
      DeviceGeometry g = c.geometry;
      g.radius = a;
      g.edge_zone_width = std::min(c.geometry.edge_zone_width, 0.2 * a);
      validate(g);
    }
    if (c.edge_gain && !(*c.edge_gain >= 1.0)) throw parameter_error("device: edge_gain must be >= 1");
    if (c.output_format != "csv" && c.output_format != "json")
      throw parameter_error("output: format must be csv or json");
    if (c.sweep.cycles < 1 || !(c.sweep.rate > 0.0) || !(c.sweep.v_hi > c.sweep.v_lo))
      throw parameter_error("protocol.sweep: need cycles >= 1, rate > 0, v_hi > v_lo");
    if (c.retention.samples < 10 || !(c.retention.t_first > 0.0) || !(c.retention.t_last > c.retention.t_first))
      throw parameter_error("protocol.retention: need samples >= 10 and 0 < t_first < t_last");
    if (c.endurance.cycles < 1) throw parameter_error("protocol.endurance: cycles must be >= 1");
    if (c.multilevel.repeats < 1) throw parameter_error("protocol.multilevel: repeats must be >= 1");
  } catch (const parameter_error& e) {
    throw config_error(e.what());
  }
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw config_error(path + ": " + e.what());
  }
  RunConfig c = parse_config(j);
  validate(c);
  return c;
}

/// Geometry of one device in a run; the edge zone is kept inside small discs.
inline DeviceGeometry geometry_for(const RunConfig& c, double radius) {
  DeviceGeometry g = c.geometry;
  g.radius = radius;
  g.edge_zone_width = std::min(c.geometry.edge_zone_width, 0.2 * radius);
  return g;
}

}  // namespace nbsto::io
