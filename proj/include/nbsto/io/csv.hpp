#pragma once

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "nbsto/core/errors.hpp"
#include "nbsto/core/trace.hpp"
#include "nbsto/device/protocols.hpp"
#include "nbsto/electrostatics/profile.hpp"
#include "nbsto/electrostatics/solver.hpp"

namespace nbsto::io {

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t c = line.find(',', start);
    out.push_back(trim(line.substr(start, c == std::string_view::npos ? std::string_view::npos : c - start)));
    if (c == std::string_view::npos) break;
    start = c + 1;
  }
  return out;
}

/// Strict decimal parse; "nan" and "inf" parse but are rejected by the caller.
inline bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  const std::string buf(s);
  char* end = nullptr;
  errno = 0;
  out = std::strtod(buf.c_str(), &end);
  return end == buf.c_str() + buf.size() && errno != ERANGE;
}

/// 17 significant digits, enough to round-trip any double.
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Reads a `t_s,v_V,i_A` trace. Errors name the offending line.
inline TimeSeriesTrace parse_trace(std::istream& in, const std::string& source = "<stream>") {
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  TimeSeriesTrace out;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (line_no == 1 && view.substr(0, 3) == "\xEF\xBB\xBF") view.remove_prefix(3);
    if (detail::trim(view).empty()) continue;
    const auto cells = detail::split(view);
    if (!header) {
      if (cells.size() != 3 || cells[0] != "t_s" || cells[1] != "v_V" || cells[2] != "i_A")
        throw io_error(source + ":" + std::to_string(line_no) + ": expected header 't_s,v_V,i_A'");
      header = true;
      continue;
    }
    if (cells.size() != 3)
      throw io_error(source + ":" + std::to_string(line_no) + ": expected 3 columns, got " +
                     std::to_string(cells.size()));
    double v[3];
    for (int c = 0; c < 3; ++c) {
      if (!detail::parse_double(cells[c], v[c]))
        throw io_error(source + ":" + std::to_string(line_no) + ": cannot parse '" + std::string(cells[c]) + "'");
      if (!std::isfinite(v[c]))
        throw io_error(source + ":" + std::to_string(line_no) + ": non-finite value '" + std::string(cells[c]) + "'");
    }
    if (!out.empty() && !(v[0] > out.records().back().t))
      throw io_error(source + ":" + std::to_string(line_no) + ": time must be strictly increasing");
    out.push_back({v[0], v[1], v[2]});
  }
  if (!header) throw io_error(source + ": empty input");
  return out;
}

inline TimeSeriesTrace ingest_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  return parse_trace(in, path);
}

inline void write_trace(std::ostream& out, const TimeSeriesTrace& trace) {
  out << "t_s,v_V,i_A\n";
  for (const auto& r : trace.records())
    out << detail::fmt(r.t) << ',' << detail::fmt(r.v) << ',' << detail::fmt(r.i) << '\n';
}

inline void write_iv_trace(std::ostream& out, const device::IVTrace& trace) {
  out << "t_s,v_V,i_A,i_center_A,i_edge_A,n_center_m3,n_edge_m3\n";
  for (const auto& s : trace.samples)
    out << detail::fmt(s.t) << ',' << detail::fmt(s.v) << ',' << detail::fmt(s.i) << ',' << detail::fmt(s.i_center)
        << ',' << detail::fmt(s.i_edge) << ',' << detail::fmt(s.n_center) << ',' << detail::fmt(s.n_edge) << '\n';
}

inline void write_profile(std::ostream& out, const electrostatics::FieldProfile& p) {
  out << "r_m,e_z_V_per_m\n";
  for (std::size_t i = 0; i < p.r.size(); ++i) out << detail::fmt(p.r[i]) << ',' << detail::fmt(p.e_z[i]) << '\n';
}

inline void write_field_grid(std::ostream& out, const electrostatics::PotentialField& f) {
  out << "r_m,z_m,phi_V\n";
  for (std::size_t j = 0; j < f.mesh.nz(); ++j)
    for (std::size_t i = 0; i < f.mesh.nr(); ++i)
      out << detail::fmt(f.mesh.r[i]) << ',' << detail::fmt(f.mesh.z[j]) << ',' << detail::fmt(f.at(i, j)) << '\n';
}

/// Writes through `fn(stream)` to `path`, raising io_error on failure.
template <class Fn>
void write_file(const std::string& path, Fn&& fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path);
  fn(out);
  out.flush();
  if (!out) throw io_error("write failed: " + path);
}

}  // namespace nbsto::io
