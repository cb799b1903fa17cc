#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "nbsto/core/errors.hpp"

namespace nbsto {

struct TraceRecord {
  double t;  // s
  double v;  // V
  double i;  // A, signed
};

struct TraceMeta {
  std::string device_id;
  double radius = 0.0;  // m, 0 when unknown
  std::string protocol;
};

/// Sampled (t, V, I) series. Time is strictly increasing and every value is
/// finite; `push_back` rejects anything else.
class TimeSeriesTrace {
 public:
  TimeSeriesTrace() = default;
  explicit TimeSeriesTrace(TraceMeta meta) : meta_(std::move(meta)) {}

  void push_back(const TraceRecord& r) {
    if (!std::isfinite(r.t) || !std::isfinite(r.v) || !std::isfinite(r.i))
      throw parameter_error("trace: non-finite value at t=" + std::to_string(r.t));
    if (!records_.empty() && !(r.t > records_.back().t))
      throw parameter_error("trace: time must be strictly increasing");
    records_.push_back(r);
  }

  const std::vector<TraceRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  const TraceRecord& operator[](std::size_t k) const { return records_[k]; }

  TraceMeta& meta() noexcept { return meta_; }
  const TraceMeta& meta() const noexcept { return meta_; }

  void reserve(std::size_t n) { records_.reserve(n); }

 private:
  std::vector<TraceRecord> records_;
  TraceMeta meta_;
};

}  // namespace nbsto
