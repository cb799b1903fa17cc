#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "nbsto/io/config.hpp"
#include "nbsto/io/csv.hpp"
#include "nbsto/io/report.hpp"

using namespace nbsto;
using namespace nbsto::io;

namespace {

std::string message_of(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_trace(in, "trace.csv");
  } catch (const io_error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Csv, ReadsThreeRows) {
  std::istringstream in("t_s,v_V,i_A\n0.001,0.3,1e-6\n0.01,0.3,8e-7\n0.1, 0.3 ,5e-7\n");
  const auto tr = parse_trace(in);
  ASSERT_EQ(tr.size(), 3u);
  EXPECT_EQ(tr[2].t, 0.1);
  EXPECT_EQ(tr[2].i, 5e-7);
}

TEST(Csv, CrlfAndBlankLines) {
  std::istringstream in("t_s,v_V,i_A\r\n\r\n1,0.3,1e-6\r\n2,0.3,2e-6\r\n");
  EXPECT_EQ(parse_trace(in).size(), 2u);
}

TEST(Csv, ErrorsNameTheLine) {
  EXPECT_NE(message_of("t_s,v_V,i_A\n1,0.3,1e-6\n2,0.3,nan\n").find("trace.csv:3"), std::string::npos);
  EXPECT_NE(message_of("t_s,v_V,i_A\n1,0.3,1e-6\n1,0.3,2e-6\n").find("strictly increasing"), std::string::npos);
  EXPECT_NE(message_of("t_s,v_V,i_A\n1,0.3\n").find("3 columns"), std::string::npos);
  EXPECT_NE(message_of("t_s,v_V,i_A\n1,0.3,abc\n").find("abc"), std::string::npos);
  EXPECT_NE(message_of("time,v,i\n").find("header"), std::string::npos);
  EXPECT_NE(message_of("").find("empty"), std::string::npos);
}

TEST(Csv, RoundTripIsExact) {
  TimeSeriesTrace tr;
  tr.push_back({0.1, 0.3, 1.0 / 3.0});
  tr.push_back({0.2, -0.5, -std::numeric_limits<double>::min()});
  tr.push_back({0.7, 0.3, 6.02214076e23});
  std::stringstream buf;
  write_trace(buf, tr);
  const auto back = parse_trace(buf);
  ASSERT_EQ(back.size(), tr.size());
  for (std::size_t k = 0; k < tr.size(); ++k) {
    EXPECT_EQ(back[k].t, tr[k].t);
    EXPECT_EQ(back[k].v, tr[k].v);
    EXPECT_EQ(back[k].i, tr[k].i);
  }
}

TEST(Csv, MissingFile) { EXPECT_THROW(ingest_trace("/nonexistent/trace.csv"), io_error); }

TEST(Config, DefaultsAndOverrides) {
  const auto c = parse_config(nlohmann::json::parse(R"({
    "geometry": {"radii_m": [2e-6, 2e-5]},
    "transport": {"mechanism": "frenkel_poole"},
    "protocol": {"sweep": {"cycles": 3}},
    "output": {"format": "json"}
  })"));
  EXPECT_EQ(c.radii.size(), 2u);
  EXPECT_EQ(c.device.law.mechanism, Mechanism::frenkel_poole);
  EXPECT_EQ(c.sweep.cycles, 3);
  EXPECT_EQ(c.output_format, "json");
  EXPECT_EQ(c.retention.samples, 41);
  EXPECT_NO_THROW(validate(c));
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(parse_config(nlohmann::json::parse(R"({"materail": {}})")), config_error);
  EXPECT_THROW(parse_config(nlohmann::json::parse(R"({"material": {"eps": 3}})")), config_error);
  EXPECT_THROW(parse_config(nlohmann::json::parse(R"({"material": {"eps_zero": "x"}})")), config_error);
  EXPECT_THROW(parse_config(nlohmann::json::parse(R"({"transport": {"mechanism": "magic"}})")), config_error);
  auto c = parse_config(nlohmann::json::parse(R"({"material": {"eps_zero": -1}})"));
  EXPECT_THROW(validate(c), config_error);
  c = parse_config(nlohmann::json::parse(R"({"output": {"format": "xml"}})"));
  EXPECT_THROW(validate(c), config_error);
}

TEST(Config, ShippedDefaultLoads) {
  const auto path = std::filesystem::path(NBSTO_SOURCE_DIR) / "configs" / "default.json";
  const auto c = load_config(path.string());
  EXPECT_EQ(c.radii, (std::vector<double>{1e-6, 1e-5, 1e-4}));
  EXPECT_EQ(c.device.detrap_rate, device::DeviceConfig{}.detrap_rate);
  EXPECT_EQ(c.material.barrier_height, MaterialParams{}.barrier_height);
}

TEST(Config, GeometryKeepsEdgeInsideDisc) {
  RunConfig c;
  EXPECT_DOUBLE_EQ(geometry_for(c, 1e-4).edge_zone_width, 200e-9);
  EXPECT_DOUBLE_EQ(geometry_for(c, 5e-7).edge_zone_width, 1e-7);
}

TEST(Report, FitJson) {
  fitting::PowerLawFit f;
  f.alpha = 0.5;
  f.notes.push_back("n");
  const auto j = fit_json(f, 1e-6, 0.3);
  EXPECT_EQ(j.at("alpha").get<double>(), 0.5);
  EXPECT_EQ(j.at("notes").size(), 1u);
}
