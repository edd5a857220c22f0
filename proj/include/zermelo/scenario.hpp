#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "zermelo/bounds.hpp"
#include "zermelo/global_search.hpp"
#include "zermelo/kkt_solver.hpp"
#include "zermelo/windfield.hpp"

namespace zermelo {

struct Scenario {
  std::string name = "scenario";
  Vec2 x_O = Vec2(0, 0);
  Vec2 x_D = Vec2(1, 0);
  double vbar = 1.0;
  WindField wind = WindField::constant(Vec2::Zero());
  int N = 16;
  SolveOptions solver;
  double h = 0.1;
  double ell = 0.0;  // <= 0 means 2.5 h
  int K = 8;
  std::uint64_t seed = 0;

  long violation_samples = 100000;
  int fd_samples = 200;
  std::vector<double> study_radii;  // absolute Yinf radii; empty means a default ladder
  int study_samples = 4;

  double L_tilde() const { return (x_D - x_O).norm(); }
};

// Strict parsing: unknown keys, wrong types and invalid values throw
// Error(ConfigParse).
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);

WindField wind_from_json(const nlohmann::json& j);
nlohmann::json to_json(const WindField& w);
nlohmann::json to_json(const State& z);
nlohmann::json to_json(const WindBounds& wb);
nlohmann::json to_json(const BoundSet& bs);
nlohmann::json to_json(const OmegaReport& r);
nlohmann::json to_json(const ViolationReport& r);
nlohmann::json to_json(const GraphStats& s);
nlohmann::json to_json(const DerivativeCheck& d);

// Ω depends on c̄₀ and c̄₀ on Ω. Iterate from the bare segment until the
// estimate settles.
struct ScenarioDomain {
  Ellipse omega;
  WindBounds bounds;
  int iterations = 0;
  bool converged = false;
};
// Throws WindExceedsAirspeed when c̄₀ reaches the airspeed.
ScenarioDomain scenario_domain(const Scenario& sc);

struct Optimum {
  KKTIterate chi;
  double T = 0;
  std::string source;  // "global" or "straight"
  SolveStatus status = SolveStatus::MaxIter;
};
// Best global candidate; falls back to a damped solve from the straight line
// when the graph cannot connect the endpoints. Throws on failure.
Optimum find_optimum(const Scenario& sc, const Ellipse& omega);

struct StudyRow {
  double radius = 0;
  int sample = 0;
  int iterations = 0;
  bool reached_optimum = false;
  double max_ratio = 0;  // largest ‖e_{k+1}‖/‖e_k‖ in Y2
  std::string status;
};

struct StudyResult {
  std::vector<StudyRow> rows;
  double R_empirical = 0;  // largest radius up to which every start contracted onto the optimum
};

// Undamped Newton from χ* + perturbations of Yinf size r, for every r.
StudyResult convergence_study(const Scenario& sc, const KKTIterate& chi_star, const std::vector<double>& radii,
                              int samples, std::uint64_t seed);
std::vector<double> default_study_radii(const Scenario& sc);
std::string study_csv(const StudyResult& r);

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace zermelo
