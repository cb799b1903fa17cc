#pragma once

#include <json.hpp>

#include "nbsto/device/protocols.hpp"
#include "nbsto/electrostatics/profile.hpp"
#include "nbsto/fitting/power_law.hpp"

namespace nbsto::io {

inline nlohmann::json fit_json(const fitting::PowerLawFit& f, double radius, double read_v) {
  nlohmann::json j{{"radius_m", radius}, {"read_v_V", read_v},   {"alpha", f.alpha},
                   {"stderr", f.stderr_alpha}, {"i0", f.i0}, {"t0", f.t0},
                   {"r2_adj", f.r2_adj}};
  j["converged"] = f.converged;
  j["iterations"] = f.iterations;
  if (!f.notes.empty()) j["notes"] = f.notes;
  return j;
}

inline nlohmann::json scaling_json(const fitting::ScalingReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::json j{{"radius_m", row.radius}};
    j["alpha_pos_0.3V"] = row.alpha_positive ? nlohmann::json(*row.alpha_positive) : nlohmann::json();
    j["alpha_neg_0.5V"] = row.alpha_negative ? nlohmann::json(*row.alpha_negative) : nlohmann::json();
    rows.push_back(j);
  }
  return {{"rows", rows},
          {"trend_pos", fitting::to_string(r.positive)},
          {"trend_neg", fitting::to_string(r.negative)},
          {"warnings", r.warnings},
          {"annotations", r.annotations}};
}

inline nlohmann::json profile_summary_json(const electrostatics::FieldProfile& p) {
  return {{"radius_m", p.radius},     {"depth_m", p.depth},         {"e_center_V_per_m", p.e_center},
          {"e_max_V_per_m", p.e_max}, {"r_at_max_m", p.r_at_max}, {"enhancement", p.enhancement}};
}

inline nlohmann::json iv_trace_json(const device::IVTrace& tr) {
  nlohmann::json t = nlohmann::json::array(), v = t, i = t, ic = t, ie = t;
  for (const auto& s : tr.samples) {
    t.push_back(s.t);
    v.push_back(s.v);
    i.push_back(s.i);
    ic.push_back(s.i_center);
    ie.push_back(s.i_edge);
  }
  return {{"radius_m", tr.meta.radius}, {"protocol", tr.meta.protocol}, {"t_s", t},
          {"v_V", v}, {"i_A", i}, {"i_center_A", ic}, {"i_edge_A", ie}};
}

inline nlohmann::json trace_json(const TimeSeriesTrace& tr) {
  nlohmann::json t = nlohmann::json::array(), v = t, i = t;
  for (const auto& r : tr.records()) {
    t.push_back(r.t);
    v.push_back(r.v);
    i.push_back(r.i);
  }
  return {{"radius_m", tr.meta().radius}, {"protocol", tr.meta().protocol}, {"t_s", t}, {"v_V", v}, {"i_A", i}};
}

}  // namespace nbsto::io
