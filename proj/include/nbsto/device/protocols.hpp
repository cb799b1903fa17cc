#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "nbsto/core/errors.hpp"
#include "nbsto/core/trace.hpp"
#include "nbsto/core/waveform.hpp"
#include "nbsto/device/model.hpp"

namespace nbsto::device {

struct IVSample {
  double t;         // s
  double v;         // V
  double i;         // A
  double i_center;  // A
  double i_edge;    // A
  double n_center;  // 1/m^3
  double n_edge;    // 1/m^3
};

struct IVTrace {
  TraceMeta meta;
  std::vector<IVSample> samples;

  TimeSeriesTrace to_trace() const {
    TimeSeriesTrace out(meta);
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back({s.t, s.v, s.i});
    return out;
  }
};

inline IVSample sample(const DeviceState& s, double t, double v) {
  const CurrentSample c = device_current(s, v);
  return {t, v, c.i, c.i_center, c.i_edge, s.center.trap.n, s.edge.trap.n};
}

struct SweepResult {
  DeviceState state;
  IVTrace trace;
};

/// Drives the device through a waveform, sampling at its sample times
/// (relative to the start of the waveform). Each pair of segments of a
/// contiguous waveform counts as one cycle.
inline SweepResult run_sweep(DeviceState s, const BiasWaveform& wf) {
  SweepResult out;
  out.trace.meta.radius = s.geometry.radius;
  out.trace.meta.protocol = "sweep";
  const std::vector<double> times = wf.sample_times();
  const double t_start = s.t;
  std::size_t k = 0;
  auto record_until = [&](double t_rel) {
    while (k < times.size() && times[k] <= t_rel * (1.0 + 1e-12) + 1e-15) {
      out.trace.samples.push_back(sample(s, t_start + times[k], wf.voltage_at(times[k])));
      ++k;
    }
  };
  out.trace.samples.reserve(times.size());
  record_until(0.0);
  double seg_t0 = 0.0;
  const auto& segs = wf.segments();
  for (std::size_t m = 0; m < segs.size(); ++m) {
    const auto& seg = segs[m];
    auto v_of = [&](double t_rel) { return seg.v_start + (seg.v_end - seg.v_start) * ((t_rel - seg_t0) / seg.duration); };
    double t_rel = seg_t0;
    const double seg_end = seg_t0 + seg.duration;
    while (t_rel < seg_end) {
      double next = seg_end;
      if (k < times.size() && times[k] > t_rel && times[k] < seg_end) next = times[k];
      s = advance(s, v_of(t_rel), v_of(next), next - t_rel);
      t_rel = next;
      if (t_rel < seg_end) record_until(t_rel);
    }
    seg_t0 = seg_end;
    record_until(seg_t0);
    if (!wf.pulse_train() && m % 2 == 1) ++s.cycle_count;
  }
  out.state = std::move(s);
  return out;
}

struct CycleStats {
  int cycle = 0;
  bool pinched = false;    // I V >= 0 everywhere and I vanishes at V = 0
  double drift = 0.0;      // max relative change against the previous cycle
  double i_max = 0.0;      // A
  double loop_area = 0.0;  // |closed integral of I dV|, W; zero without hysteresis
};

/// Per-cycle pinch and drift of a sweep trace with `period` seconds per
/// cycle. Drift compares each sample with the previous cycle at the same
/// phase (linear interpolation), relative to max(|I|, floor * max|I|).
inline std::vector<CycleStats> analyze_sweep(const DeviceState& any, const IVTrace& tr, int cycles, double period,
                                             double floor = 1e-3) {
  if (cycles < 1 || !(period > 0.0)) throw parameter_error("analyze_sweep: need cycles >= 1 and period > 0");
  const auto& s = tr.samples;
  if (s.size() < 2) throw parameter_error("analyze_sweep: trace too short");
  const double t0 = s.front().t;
  auto interp = [&](double t) {
    auto it = std::lower_bound(s.begin(), s.end(), t, [](const IVSample& a, double x) { return a.t < x; });
    if (it == s.begin()) return it->i;
    if (it == s.end()) return s.back().i;
    const auto& b = *it;
    const auto& a = *(it - 1);
    return a.i + (b.i - a.i) * (t - a.t) / (b.t - a.t);
  };
  const double i_zero = std::abs(device_current(any, 0.0).i);
  auto cycle_of = [&](double t) { return std::min(cycles - 1, static_cast<int>((t - t0) / period + 1e-9)); };
  std::vector<CycleStats> out(static_cast<std::size_t>(cycles));
  for (int c = 0; c < cycles; ++c) out[c].cycle = c;
  for (const auto& q : s) {
    const int c = cycle_of(q.t);
    out[c].i_max = std::max(out[c].i_max, std::abs(q.i));
  }
  for (auto& c : out) c.pinched = i_zero == 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    const auto& q = s[k];
    const int c = cycle_of(q.t);
    auto& st = out[c];
    if (k > 0) out[cycle_of(0.5 * (q.t + s[k - 1].t))].loop_area += 0.5 * (q.i + s[k - 1].i) * (q.v - s[k - 1].v);
    if (q.i * q.v < 0.0) st.pinched = false;
    if (c == 0) continue;
    const double prev = interp(q.t - period);
    const double scale = std::max(std::abs(q.i), floor * st.i_max);
    if (scale > 0.0) st.drift = std::max(st.drift, std::abs(q.i - prev) / scale);
  }
  for (auto& c : out) c.loop_area = std::abs(c.loop_area);
  return out;
}

struct RetentionResult {
  DeviceState state;
  TimeSeriesTrace trace;  // t relative to the end of the write pulse
};

/// Write pulse at `write_v`, then a continuous hold at `read_v` sampled on
/// `schedule` (seconds after the pulse).
inline RetentionResult run_retention(DeviceState s, double write_v, double read_v, const std::vector<double>& schedule,
                                     double pulse_width = 1e-3) {
  if (!(std::abs(read_v) <= 0.5)) throw parameter_error("run_retention: |read_v| must be <= 0.5 V");
  if (!(pulse_width > 0.0)) throw parameter_error("run_retention: pulse_width must be > 0");
  if (schedule.empty() || !(schedule.front() > 0.0)) throw parameter_error("run_retention: schedule must start after 0");
  for (std::size_t k = 1; k < schedule.size(); ++k)
    if (!(schedule[k] > schedule[k - 1])) throw parameter_error("run_retention: schedule must be increasing");
  RetentionResult out;
  out.trace.meta().radius = s.geometry.radius;
  out.trace.meta().protocol = write_v > 0.0 ? "retention_lrs" : "retention_hrs";
  s = advance(s, write_v, write_v, pulse_width);
  double t = 0.0;
  for (double tk : schedule) {
    s = advance(s, read_v, read_v, tk - t);
    t = tk;
    out.trace.push_back({tk, read_v, device_current(s, read_v).i});
  }
  out.state = std::move(s);
  return out;
}

struct EnduranceResult {
  DeviceState state;
  TimeSeriesTrace reads;        // LRS and HRS reads, alternating
  std::vector<double> lrs, hrs; // A
  std::vector<double> window;   // per cycle
};

/// Alternating SET and RESET pulses with an instantaneous read after each.
inline EnduranceResult run_endurance(DeviceState s, int cycles, double read_v, double set_v = 2.0, double reset_v = -3.0,
                                     double pulse_width = 1e-3) {
  if (cycles < 1) throw parameter_error("run_endurance: cycles must be >= 1");
  if (!(pulse_width > 0.0)) throw parameter_error("run_endurance: pulse_width must be > 0");
  EnduranceResult out;
  out.reads.meta().radius = s.geometry.radius;
  out.reads.meta().protocol = "endurance";
  for (int c = 0; c < cycles; ++c) {
    s = advance(s, set_v, set_v, pulse_width);
    const double lrs = device_current(s, read_v).i;
    out.reads.push_back({s.t, read_v, lrs});
    s = advance(s, reset_v, reset_v, pulse_width);
    const double hrs = device_current(s, read_v).i;
    out.reads.push_back({s.t, read_v, hrs});
    ++s.cycle_count;
    out.lrs.push_back(lrs);
    out.hrs.push_back(hrs);
    out.window.push_back(read_v == 0.0 ? 1.0 : memory_window(hrs, lrs));
  }
  out.state = std::move(s);
  return out;
}

struct LevelBand {
  double set_v = 0.0;
  double reset_v = 0.0;
  std::vector<double> reads;  // A
  double mean = 0.0;
  double stddev = 0.0;
};

struct MultilevelResult {
  DeviceState state;
  std::vector<LevelBand> bands;
};

/// For each (SET, RESET) pair, `repeats` sweep cycles 0 -> SET -> 0 -> RESET
/// -> 0 at `rate`, each followed by a read at `read_v`.
inline MultilevelResult run_multilevel(DeviceState s, const std::vector<double>& set_levels,
                                       const std::vector<double>& reset_levels, int repeats, double read_v,
                                       double rate = 1.52) {
  if (set_levels.empty() || reset_levels.empty()) throw parameter_error("run_multilevel: level lists must be non-empty");
  if (repeats < 1) throw parameter_error("run_multilevel: repeats must be >= 1");
  if (!(rate > 0.0)) throw parameter_error("run_multilevel: rate must be > 0");
  MultilevelResult out;
  for (double vs : set_levels) {
    for (double vr : reset_levels) {
      if (!(vs > 0.0) || !(vr < 0.0)) throw parameter_error("run_multilevel: SET levels must be > 0, RESET levels < 0");
      LevelBand band;
      band.set_v = vs;
      band.reset_v = vr;
      for (int k = 0; k < repeats; ++k) {
        const double t_set = vs / rate, t_reset = -vr / rate;
        s = advance(s, 0.0, vs, t_set);
        s = advance(s, vs, 0.0, t_set);
        s = advance(s, 0.0, vr, t_reset);
        s = advance(s, vr, 0.0, t_reset);
        ++s.cycle_count;
        band.reads.push_back(device_current(s, read_v).i);
      }
      double sum = 0.0;
      for (double x : band.reads) sum += x;
      band.mean = sum / static_cast<double>(repeats);
      double ss = 0.0;
      for (double x : band.reads) ss += (x - band.mean) * (x - band.mean);
      band.stddev = repeats > 1 ? std::sqrt(ss / static_cast<double>(repeats - 1)) : 0.0;
      out.bands.push_back(std::move(band));
    }
  }
  out.state = std::move(s);
  return out;
}

}  // namespace nbsto::device
