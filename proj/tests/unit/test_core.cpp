#include <gtest/gtest.h>

#include <cmath>

#include "nbsto/core/constants.hpp"
#include "nbsto/core/errors.hpp"
#include "nbsto/core/params.hpp"
#include "nbsto/core/trace.hpp"
#include "nbsto/core/waveform.hpp"

using namespace nbsto;

TEST(Waveform, SweepCycleDuration) {
  const auto wf = build_sweep(2.0, -3.0, 1.52, 1, 0.01);
  EXPECT_NEAR(wf.duration(), 6.578947368421052, 1e-12);
  EXPECT_DOUBLE_EQ(wf.voltage_at(0.0), 2.0);
  EXPECT_NEAR(wf.voltage_at(wf.duration() / 2), -3.0, 1e-12);
}

TEST(Waveform, SymmetricTriangle) {
  const auto wf = build_sweep(1.0, -1.0, 1.0, 1, 0.01);
  EXPECT_DOUBLE_EQ(wf.duration(), 4.0);
  for (double t : {0.3, 0.9, 1.7})
    EXPECT_NEAR(wf.voltage_at(t), wf.voltage_at(4.0 - t), 1e-12);
}

TEST(Waveform, ThousandCyclesMonotone) {
  const auto wf = build_sweep(2.0, -3.0, 1.52, 1000, 0.01);
  EXPECT_EQ(wf.segments().size(), 2000u);
  const auto t = wf.sample_times();
  for (std::size_t k = 1; k < t.size(); ++k) ASSERT_GT(t[k], t[k - 1]);
  EXPECT_NEAR(t.back(), 1000 * 6.578947368421052, 1e-6);
  // every cycle is the same shape
  const double period = wf.duration() / 1000;
  for (double s : {0.1, 2.2, 5.0}) EXPECT_NEAR(wf.voltage_at(s), wf.voltage_at(s + 517 * period), 1e-9);
}

TEST(Waveform, RateRecoveredFromSamples) {
  for (double rate : {0.5, 1.52, 4.0}) {
    const auto wf = build_sweep(2.0, -3.0, rate, 3, 0.01);
    const auto t = wf.sample_times();
    double travel = 0.0;
    for (std::size_t k = 1; k < t.size(); ++k) travel += std::abs(wf.voltage_at(t[k]) - wf.voltage_at(t[k - 1]));
    EXPECT_NEAR(travel / wf.duration(), rate, 1e-3 * rate);
  }
}

TEST(Waveform, Errors) {
  EXPECT_THROW(build_sweep(2.0, -3.0, 0.0, 1, 0.01), parameter_error);
  EXPECT_THROW(build_sweep(2.0, -3.0, 1.0, 1, 0.0), parameter_error);
  EXPECT_THROW(build_sweep(2.0, -3.0, -1.0, 1, 0.01), parameter_error);
  EXPECT_THROW(build_pulse_train(2.0, -3.0, 0.3, 1e-3, {}), parameter_error);
}

TEST(Waveform, PulseTrainRetention) {
  const auto sched = log_schedule(1e-3, 1e2, 21);
  for (double rv : {0.3, -0.5}) {
    const auto wf = build_pulse_train(2.0, -3.0, rv, 1e-3, sched);
    EXPECT_TRUE(wf.pulse_train());
    EXPECT_DOUBLE_EQ(wf.voltage_at(0.5e-3), -3.0);
    EXPECT_DOUBLE_EQ(wf.voltage_at(1.5e-3), 2.0);
    EXPECT_DOUBLE_EQ(wf.voltage_at(50.0), rv);
  }
  const auto zero = build_pulse_train(0.0, 0.0, 0.0, 1e-3, {1.0});
  for (double t : zero.sample_times()) EXPECT_EQ(zero.voltage_at(t), 0.0);
}

TEST(Geometry, PerimeterToArea) {
  for (double a : {1e-8, 3.3e-7, 1e-6, 1e-5, 1e-4, 2.5e-3}) {
    DeviceGeometry g;
    g.radius = a;
    EXPECT_DOUBLE_EQ(g.perimeter_to_area(), 2.0 / a);
    EXPECT_NEAR(g.perimeter() / g.area(), 2.0 / a, 1e-12 * 2.0 / a);
  }
}

TEST(Geometry, Validation) {
  DeviceGeometry g;
  EXPECT_NO_THROW(validate(g));
  g.edge_zone_width = 0.0;
  EXPECT_THROW(validate(g), parameter_error);
  g.edge_zone_width = 2e-6;
  EXPECT_THROW(validate(g), parameter_error);
  g = DeviceGeometry{};
  g.radius = -1;
  EXPECT_THROW(validate(g), parameter_error);
}

TEST(Params, DefaultsValid) {
  EXPECT_NO_THROW(validate(MaterialParams{}));
  MaterialParams m;
  m.trap.h = m.trap.volume * 2;
  EXPECT_THROW(validate(m), parameter_error);
  m = MaterialParams{};
  m.ideality = 0.9;
  EXPECT_THROW(validate(m), parameter_error);
}

TEST(Constants, ElectronVoltBoundary) {
  EXPECT_DOUBLE_EQ(constants::ev_to_joule(1.0), constants::elementary_charge);
  EXPECT_NEAR(constants::thermal_voltage(300.0), 0.025851999786435535, 1e-15);
}

TEST(Trace, RejectsBadRecords) {
  TimeSeriesTrace tr;
  tr.push_back({0.0, 1.0, -1e-9});
  EXPECT_THROW(tr.push_back({0.0, 1.0, 1.0}), parameter_error);
  EXPECT_THROW(tr.push_back({1.0, 1.0, std::nan("")}), parameter_error);
  EXPECT_EQ(tr.size(), 1u);
  EXPECT_LT(tr[0].i, 0.0);  // sign preserved
}
