#include "rollkit/io.hpp"
#include "rollkit/scenarios.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace rollkit;

TEST(Scenario, DefaultsToBasePointsAndIdentity) {
  const Scenario s = io::scenario_from_json(json::parse(
      R"({"manifold":{"type":"sphere","n":2},"hat_manifold":{"type":"euclidean","n":2}})"));
  EXPECT_EQ(s.pair.n(), 2);
  EXPECT_EQ(s.q0.x, s.pair.M.base_point);
  EXPECT_EQ(s.q0.A, Matrix::Identity(2, 2));
  EXPECT_FALSE(s.q0.extended());
  EXPECT_FALSE(s.control);
  EXPECT_EQ(s.name, "custom");
}

TEST(Scenario, ExplicitState) {
  const Scenario s = io::scenario_from_json(json::parse(R"({
    "manifold": {"type": "sphere", "n": 2, "pole_sign": "-"},
    "hat_manifold": {"type": "sphere", "n": 2},
    "x0": [0.6, 0.0, -0.8], "x_hat0": [0.0, 0.6, 0.8],
    "A0": [[0, -1], [1, 0]], "extended": true, "T": 2.5})"));
  EXPECT_EQ(s.q0.x[2], -0.8);
  EXPECT_EQ(s.q0.A(0, 1), -1.0);
  ASSERT_TRUE(s.q0.B);
  EXPECT_EQ(s.q0.B->rows(), 1);
  EXPECT_EQ(*s.T, 2.5);
}

TEST(Scenario, MalformedInputs) {
  const char* bad[] = {
      R"([1, 2])",
      R"({"manifold":{"type":"sphere","n":2}})",
      R"({"manifold":{"type":"torus"},"hat_manifold":{"type":"euclidean","n":2}})",
      R"({"manifold":{"type":"sphere","n":2},"hat_manifold":{"type":"euclidean","n":3}})",
      R"({"manifold":{"type":"sphere","n":"two"},"hat_manifold":{"type":"euclidean","n":2}})",
      R"({"manifold":{"type":"sphere","n":2,"pole_sign":"up"},"hat_manifold":{"type":"euclidean","n":2}})",
      R"({"manifold":{"type":"sphere","n":2},"hat_manifold":{"type":"euclidean","n":2},"x0":[1,0,0]})",
      R"({"manifold":{"type":"sphere","n":2},"hat_manifold":{"type":"euclidean","n":2},"x0":[0,1]})",
      R"({"manifold":{"type":"sphere","n":2},"hat_manifold":{"type":"euclidean","n":2},"A0":[[1,0],[0,-1]]})",
      R"({"manifold":{"type":"sphere","n":2},"hat_manifold":{"type":"euclidean","n":2},"extended":true})",
      R"({"manifold":{"type":"sphere","n":2},"hat_manifold":{"type":"euclidean","n":2},"T":"long"})",
      R"({"manifold":{"type":"euclidean","n":0},"hat_manifold":{"type":"euclidean","n":0}})",
  };
  for (const char* text : bad) EXPECT_THROW(io::scenario_from_json(json::parse(text)), InputError) << text;
}

TEST(Scenario, BuiltinsLoad) {
  for (const auto& name : builtin_scenario_names()) {
    const Scenario s = builtin_scenario(name);
    EXPECT_EQ(s.name, name);
    ASSERT_TRUE(s.control);
    EXPECT_NO_THROW(io::control_from_json(*s.control, s.pair.n()));
  }
  EXPECT_EQ(builtin_scenario("sphere_plane_n:4").pair.n(), 4);
  EXPECT_THROW(builtin_scenario("sphere_plane_nx"), InputError);
  EXPECT_THROW(builtin_scenario("nope"), InputError);
  EXPECT_THROW(load_scenario("/nonexistent/file.json"), InputError);
}

TEST(Controls, Parsing) {
  const Control c = io::control_from_json(
      json::parse(R"({"type":"piecewise_constant","knots":[0,1],"values":[[1,0],[0,2]]})"), 2);
  EXPECT_EQ(c(1.5)[1], 2.0);
  EXPECT_EQ(c.breakpoints(), std::vector<double>{1.0});
  const Control se = io::control_from_json(json("se3_example"), 6);
  EXPECT_NEAR(se(0.3)[0], std::sqrt(2.0), 1e-15);
  EXPECT_EQ(se(0.3)[5], 1.0);
  EXPECT_THROW(io::control_from_json(json("se3_example"), 2), InputError);
  EXPECT_THROW(io::control_from_json(json("wobble"), 2), InputError);
  EXPECT_THROW(io::control_from_json(json::parse(R"({"type":"constant"})"), 2), InputError);
  EXPECT_THROW(io::control_from_json(json::parse(R"({"type":"constant","u":[1,2,3]})"), 2), InputError);
  EXPECT_THROW(io::control_from_json(json::parse(R"({"type":"piecewise_constant","knots":[1,0],"values":[[1],[2]]})"), 1),
               InputError);
  EXPECT_THROW(io::control_from_json(json::parse(R"({"type":"spline"})"), 1), InputError);
}

TEST(Csv, TrajectoryHeaderAndRows) {
  const Scenario s = builtin_scenario("sphere_plane_2d");
  const RollingTrajectory tr = integrate_rolling(s.pair, s.q0, io::control_from_json(*s.control, 2), 0.1, 0.05);
  std::ostringstream a, b;
  io::write_trajectory_csv(a, s.pair, tr);
  io::write_trajectory_csv(b, s.pair, tr);
  EXPECT_EQ(a.str(), b.str());
  std::istringstream in(a.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, std::string("# rollkit ") + kVersion);
  std::getline(in, line);
  EXPECT_EQ(line, "t,u1,u2,x1,x2,x3,xh1,xh2,A1_1,A1_2,A2_1,A2_2");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3);
}

TEST(Csv, NumbersRoundTrip) {
  for (double v : {0.1, -1.0 / 3.0, 1e-300, 12345.678901234567}) EXPECT_EQ(std::stod(io::format_number(v)), v);
}

TEST(Csv, CurveReading) {
  std::istringstream in("# comment\nt,x1,x2\n0,1,0\n0.5,0.8,0.6\n1,0.6,0.8\n");
  const auto [t, x] = io::read_curve_csv(in);
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t[1], 0.5);
  EXPECT_EQ(x[2][1], 0.8);
}

TEST(Csv, CurveErrors) {
  const char* bad[] = {"0,1\n", "0,1,2\n1,2\n", "0,1\n0,2\n", "0,1\n1,abc\n", "", "1,0\n0,1\n"};
  for (const char* text : bad) {
    std::istringstream in(text);
    EXPECT_THROW(io::read_curve_csv(in), InputError) << text;
  }
}

TEST(Json, Reports) {
  FlagReport f;
  f.ranks = {2, 3, 5};
  f.step = 3;
  f.config_dim = 5;
  f.orbit_dim = 5;
  f.controllable = true;
  const json j = io::to_json(f);
  EXPECT_EQ(j["ranks"], json::parse("[2,3,5]"));
  EXPECT_TRUE(j["controllable"].get<bool>());
  EXPECT_FALSE(j.contains("cross_check"));

  RollingReport r;
  r.normal_status = "intrinsic";
  EXPECT_EQ(io::to_json(r)["notwist_normal"], "intrinsic");
  r.notwist_normal = 1e-9;
  EXPECT_EQ(io::to_json(r)["notwist_normal"], 1e-9);
}
