#include <gtest/gtest.h>

#include <string>

#include "zermelo/scenario.hpp"

using namespace zermelo;

namespace {

const std::string kMinimal = R"({"x_O": [0, 0], "x_D": [2, 0], "vbar": 1.5, "wind": {"type": "constant", "value": [0.1, 0.2]}})";

ErrorCode parse_error(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;  // sentinel: parsed fine
}

std::string with(const std::string& extra) {
  return R"({"x_O": [0, 0], "x_D": [1, 0], "vbar": 1, "wind": {"type": "constant", "value": [0, 0]}, )" + extra + "}";
}

}  // namespace

TEST(Parse, MinimalWithDefaults) {
  const Scenario sc = parse_scenario(kMinimal);
  EXPECT_EQ(sc.x_D, Vec2(2, 0));
  EXPECT_EQ(sc.vbar, 1.5);
  EXPECT_EQ(sc.L_tilde(), 2.0);
  EXPECT_EQ(sc.wind.eval(Vec2(7, -3)), Vec2(0.1, 0.2));
  EXPECT_EQ(sc.N, 16);
  EXPECT_EQ(sc.K, 8);
  EXPECT_EQ(sc.solver.damping, Damping::None);
  EXPECT_TRUE(sc.study_radii.empty());
}

TEST(Parse, AllOptionalKeys) {
  const Scenario sc = parse_scenario(with(
      R"("name": "x", "N": 8, "quadrature": 2, "tol_abs": 1e-9, "tol_rel": 0, "max_iter": 7, "damping": "armijo",
         "speed_floor": 1e-5, "h": 0.2, "ell": 0.5, "K": 3, "seed": 42, "violation_samples": 10, "fd_samples": 5,
         "study_radii": [0.3, 0.1], "study_samples": 2)"));
  EXPECT_EQ(sc.name, "x");
  EXPECT_EQ(sc.N, 8);
  EXPECT_EQ(sc.solver.quadrature, 2);
  EXPECT_EQ(sc.solver.max_iter, 7);
  EXPECT_EQ(sc.solver.damping, Damping::ArmijoHalving);
  EXPECT_EQ(sc.ell, 0.5);
  EXPECT_EQ(sc.seed, 42u);
  EXPECT_EQ(sc.study_radii, (std::vector<double>{0.1, 0.3}));
}

TEST(Parse, WindTypes) {
  const WindField lin = wind_from_json(nlohmann::json::parse(R"({"type": "linear_shear", "A": [[0, 1], [0, 0]], "b": [0.5, 0]})"));
  EXPECT_EQ(lin.eval(Vec2(0, 2)), Vec2(2.5, 0));
  const WindField vor =
      wind_from_json(nlohmann::json::parse(R"({"type": "gaussian_vortex", "center": [0, 0], "amplitude": 1, "width": 1})"));
  EXPECT_EQ(vor.eval(Vec2(0, 0)), Vec2(0, 0));
  EXPECT_EQ(vor.kind(), WindField::Kind::GaussianVortex);
  const WindField sup = wind_from_json(nlohmann::json::parse(
      R"({"type": "superposition", "parts": [{"type": "constant", "value": [1, 0]}, {"type": "constant", "value": [0, 2]}]})"));
  EXPECT_EQ(sup.eval(Vec2(3, 3)), Vec2(1, 2));
}

TEST(Parse, WindRoundTrip) {
  const WindField w = WindField::superposition(
      {WindField::gaussian_vortex(Vec2(0.5, 0.1), 0.5, 0.3), WindField::constant(Vec2(0.1, 0)),
       WindField::linear_shear((Mat2() << 0, 0.2, -0.1, 0).finished(), Vec2(0, 0.05))});
  const WindField back = wind_from_json(to_json(w));
  for (const Vec2& x : {Vec2(0, 0), Vec2(0.4, 0.3), Vec2(-1, 2)}) EXPECT_EQ(back.eval(x), w.eval(x));
  EXPECT_EQ(to_json(back).dump(), to_json(w).dump());
}

TEST(Parse, StrictErrors) {
  EXPECT_EQ(parse_error(with(R"("bogus": 1)")), ErrorCode::ConfigParse);
  EXPECT_EQ(parse_error("{not json"), ErrorCode::ConfigParse);
  EXPECT_EQ(parse_error(R"({"x_O": [0, 0], "x_D": [1, 0], "vbar": 1})"), ErrorCode::ConfigParse);
  EXPECT_EQ(parse_error(with(R"("N": 1)")), ErrorCode::ConfigParse);
  EXPECT_EQ(parse_error(with(R"("N": 2.5)")), ErrorCode::ConfigParse);
  EXPECT_EQ(parse_error(with(R"("damping": "wolfe")")), ErrorCode::ConfigParse);
  EXPECT_EQ(parse_error(with(R"("h": 0.1, "ell": 0.1)")), ErrorCode::ConfigParse);
  EXPECT_EQ(parse_error(with(R"("seed": -1)")), ErrorCode::ConfigParse);
  EXPECT_EQ(parse_error(with(R"("study_radii": [0.1, -0.2])")), ErrorCode::ConfigParse);
  EXPECT_EQ(parse_error(R"({"x_O": [1, 1], "x_D": [1, 1], "vbar": 1, "wind": {"type": "constant", "value": [0, 0]}})"),
            ErrorCode::ConfigParse);
  EXPECT_EQ(parse_error(R"({"x_O": [0, 0], "x_D": [1, 0], "vbar": 1, "wind": {"type": "tornado"}})"),
            ErrorCode::ConfigParse);
  EXPECT_EQ(parse_error(R"({"x_O": [0, 0], "x_D": [1, 0], "vbar": 1, "wind": {"type": "constant", "value": [0, 0], "x": 1}})"),
            ErrorCode::ConfigParse);
  EXPECT_EQ(parse_error(R"({"x_O": [0], "x_D": [1, 0], "vbar": 1, "wind": {"type": "constant", "value": [0, 0]}})"),
            ErrorCode::ConfigParse);
  EXPECT_THROW(load_scenario("/nonexistent/scenario.json"), Error);
}

TEST(Domain, ZeroWindIsTheSegment) {
  const ScenarioDomain d = scenario_domain(parse_scenario(with(R"("name": "calm")")));
  EXPECT_TRUE(d.converged);
  EXPECT_EQ(d.bounds.c0, 0.0);
  EXPECT_DOUBLE_EQ(d.omega.major_sum, 1.0);
}

TEST(Domain, FixedPointIsSelfConsistent) {
  Scenario sc;
  sc.wind = WindField::gaussian_vortex(Vec2(0.5, 0.1), 0.5, 0.3);
  const ScenarioDomain d = scenario_domain(sc);
  EXPECT_TRUE(d.converged);
  EXPECT_GT(d.iterations, 1);
  // the ellipse is the one implied by the final wind bound
  const Ellipse again = ellipse_domain(sc.x_O, sc.x_D, sc.vbar, d.bounds.c0);
  EXPECT_NEAR(again.major_sum, d.omega.major_sum, 1e-8 * d.omega.major_sum);
  EXPECT_GE(d.bounds.c0, compute_bounds(sc.wind, d.omega).c0 * (1 - 1e-12));
}

TEST(Domain, ConstantWindAboveAirspeedThrows) {
  Scenario sc;
  sc.wind = WindField::constant(Vec2(1.2, 0));
  try {
    scenario_domain(sc);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::WindExceedsAirspeed);
  }
}

TEST(FindOptimum, ZeroWindStraight) {
  Scenario sc;
  sc.N = 8;
  sc.h = 0.25;
  sc.K = 2;
  // the bare segment gives a one-row graph
  const Optimum o = find_optimum(sc, scenario_domain(sc).omega);
  EXPECT_EQ(o.status, SolveStatus::Converged);
  EXPECT_NEAR(o.T, 1.0, 1e-10);
}

TEST(Study, ContractsBelowEmpiricalRadius) {
  Scenario sc;
  sc.wind = WindField::gaussian_vortex(Vec2(0.5, 0.1), 0.5, 0.3);
  sc.solver.damping = Damping::ArmijoHalving;
  const Optimum o = find_optimum(sc, scenario_domain(sc).omega);
  const std::vector<double> radii = default_study_radii(sc);
  ASSERT_FALSE(radii.empty());
  EXPECT_TRUE(std::is_sorted(radii.begin(), radii.end()));
  const StudyResult r = convergence_study(sc, o.chi, radii, 3, 5);
  EXPECT_EQ(r.rows.size(), radii.size() * 3);
  EXPECT_GT(r.R_empirical, 0);
  for (const auto& row : r.rows) {
    if (row.radius > r.R_empirical) continue;
    EXPECT_TRUE(row.reached_optimum) << row.radius;
    EXPECT_LT(row.max_ratio, 1.0) << row.radius;
  }
  const std::string csv = study_csv(r);
  EXPECT_EQ(csv, study_csv(convergence_study(sc, o.chi, radii, 3, 5)));
}

TEST(Hash, KnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ull);
}
