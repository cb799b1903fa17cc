#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "nbsto/core/errors.hpp"

namespace nbsto {

/// Piecewise-linear bias program. Contiguous unless `pulse_train` is set,
/// in which case segment boundaries may jump.
class BiasWaveform {
 public:
  struct Segment {
    double duration;  // s
    double v_start;   // V
    double v_end;     // V
  };

  BiasWaveform(std::vector<Segment> segments, double sample_interval, bool pulse_train = false,
               std::vector<double> explicit_samples = {})
      : segments_(std::move(segments)),
        sample_interval_(sample_interval),
        pulse_train_(pulse_train),
        explicit_samples_(std::move(explicit_samples)) {
    if (segments_.empty()) throw parameter_error("waveform: no segments");
    if (!(sample_interval_ > 0.0) || !std::isfinite(sample_interval_))
      throw parameter_error("waveform: sample_interval must be > 0");
    for (std::size_t k = 0; k < segments_.size(); ++k) {
      const auto& s = segments_[k];
      if (!(s.duration > 0.0) || !std::isfinite(s.duration))
        throw parameter_error("waveform: segment durations must be > 0");
      if (!std::isfinite(s.v_start) || !std::isfinite(s.v_end))
        throw parameter_error("waveform: non-finite voltage");
      if (k > 0 && !pulse_train_ && s.v_start != segments_[k - 1].v_end)
        throw parameter_error("waveform: segments are not contiguous");
    }
    for (std::size_t k = 1; k < explicit_samples_.size(); ++k)
      if (!(explicit_samples_[k] > explicit_samples_[k - 1]))
        throw parameter_error("waveform: sample times must be strictly increasing");
  }

  const std::vector<Segment>& segments() const noexcept { return segments_; }
  double sample_interval() const noexcept { return sample_interval_; }
  bool pulse_train() const noexcept { return pulse_train_; }

  double duration() const {
    double t = 0.0;
    for (const auto& s : segments_) t += s.duration;
    return t;
  }

  /// Voltage at time t. Segments are half-open [start, end) except the last,
  /// so at a pulse-train jump the later level wins.
  double voltage_at(double t) const {
    double t0 = 0.0;
    for (std::size_t k = 0; k < segments_.size(); ++k) {
      const auto& s = segments_[k];
      const bool last = k + 1 == segments_.size();
      if (t < t0 + s.duration || last) {
        const double f = std::clamp((t - t0) / s.duration, 0.0, 1.0);
        return s.v_start + f * (s.v_end - s.v_start);
      }
      t0 += s.duration;
    }
    return segments_.back().v_end;
  }

  /// Sampling instants. Each segment is split into ceil(duration/interval)
  /// equal steps so that samples land on every segment boundary.
  std::vector<double> sample_times() const {
    if (!explicit_samples_.empty()) return explicit_samples_;
    std::vector<double> t{0.0};
    double t0 = 0.0;
    for (const auto& s : segments_) {
      const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(s.duration / sample_interval_ - 1e-9)));
      const double dt = s.duration / static_cast<double>(n);
      for (std::size_t i = 1; i <= n; ++i) t.push_back(i == n ? t0 + s.duration : t0 + dt * i);
      t0 += s.duration;
    }
    return t;
  }

 private:
  std::vector<Segment> segments_;
  double sample_interval_;
  bool pulse_train_;
  std::vector<double> explicit_samples_;
};

/// Triangular sweep v_hi -> v_lo -> v_hi, repeated `cycles` times.
inline BiasWaveform build_sweep(double v_hi, double v_lo, double rate, int cycles,
                                double sample_interval) {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw parameter_error("sweep: rate must be > 0");
  if (!(sample_interval > 0.0)) throw parameter_error("sweep: sample_interval must be > 0");
  if (!(v_hi > v_lo)) throw parameter_error("sweep: v_hi must exceed v_lo");
  if (cycles < 1) throw parameter_error("sweep: cycles must be >= 1");
  const double half = (v_hi - v_lo) / rate;
  std::vector<BiasWaveform::Segment> segs;
  segs.reserve(2 * static_cast<std::size_t>(cycles));
  for (int c = 0; c < cycles; ++c) {
    segs.push_back({half, v_hi, v_lo});
    segs.push_back({half, v_lo, v_hi});
  }
  return BiasWaveform(std::move(segs), sample_interval);
}

/// Retention program: a conditioning pulse at `reset_v`, the write pulse at
/// `set_v`, then a continuous hold at `read_v`. Samples are taken at
/// `read_schedule` (seconds after the end of the write pulse).
inline BiasWaveform build_pulse_train(double set_v, double reset_v, double read_v,
                                      double pulse_width, const std::vector<double>& read_schedule) {
  if (!(pulse_width > 0.0)) throw parameter_error("pulse train: pulse_width must be > 0");
  if (read_schedule.empty()) throw parameter_error("pulse train: empty read schedule");
  if (!(read_schedule.front() > 0.0)) throw parameter_error("pulse train: schedule must start after t = 0");
  for (std::size_t k = 1; k < read_schedule.size(); ++k)
    if (!(read_schedule[k] > read_schedule[k - 1]))
      throw parameter_error("pulse train: read schedule must be strictly increasing");
  std::vector<BiasWaveform::Segment> segs{
      {pulse_width, reset_v, reset_v},
      {pulse_width, set_v, set_v},
      {read_schedule.back(), read_v, read_v},
  };
  std::vector<double> samples;
  samples.reserve(read_schedule.size());
  for (double t : read_schedule) samples.push_back(2.0 * pulse_width + t);
  const double interval = read_schedule.size() > 1 ? read_schedule[1] - read_schedule[0] : read_schedule[0];
  return BiasWaveform(std::move(segs), interval, true, std::move(samples));
}

/// `count` points log-spaced on [t_first, t_last].
inline std::vector<double> log_schedule(double t_first, double t_last, std::size_t count) {
  if (!(t_first > 0.0) || !(t_last > t_first) || count < 2)
    throw parameter_error("log_schedule: need 0 < t_first < t_last and count >= 2");
  std::vector<double> t(count);
  const double a = std::log(t_first), b = std::log(t_last);
  for (std::size_t k = 0; k < count; ++k)
    t[k] = std::exp(a + (b - a) * static_cast<double>(k) / static_cast<double>(count - 1));
  t.front() = t_first;
  t.back() = t_last;
  return t;
}

}  // namespace nbsto
