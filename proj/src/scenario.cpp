#include "zermelo/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

namespace zermelo {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::ConfigParse, "config: " + what); }

void only_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) bad(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) bad("unknown key '" + it.key() + "' in " + where);
}

double number(const json& j, const std::string& key) {
  if (!j.is_number()) bad("'" + key + "' must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) bad("'" + key + "' must be finite");
  return v;
}

long integer(const json& j, const std::string& key) {
  if (!j.is_number_integer()) bad("'" + key + "' must be an integer");
  return j.get<long>();
}

Vec2 vec2(const json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 2) bad("'" + key + "' must be a 2-element array");
  return Vec2(number(j[0], key), number(j[1], key));
}

json arr(const Vec2& v) { return json::array({v.x(), v.y()}); }

}  // namespace

WindField wind_from_json(const json& j) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) bad("wind needs a string 'type'");
  const std::string type = j["type"];
  if (type == "constant") {
    only_keys(j, {"type", "value"}, "wind");
    if (!j.contains("value")) bad("constant wind needs 'value'");
    return WindField::constant(vec2(j["value"], "value"));
  }
  if (type == "linear_shear") {
    only_keys(j, {"type", "A", "b"}, "wind");
    if (!j.contains("A") || !j["A"].is_array() || j["A"].size() != 2) bad("linear_shear needs a 2x2 'A'");
    Mat2 A;
    A.row(0) = vec2(j["A"][0], "A").transpose();
    A.row(1) = vec2(j["A"][1], "A").transpose();
    return WindField::linear_shear(A, j.contains("b") ? vec2(j["b"], "b") : Vec2::Zero());
  }
  if (type == "gaussian_vortex") {
    only_keys(j, {"type", "center", "amplitude", "width"}, "wind");
    for (const char* k : {"center", "amplitude", "width"})
      if (!j.contains(k)) bad(std::string("gaussian_vortex needs '") + k + "'");
    const double width = number(j["width"], "width");
    if (!(width > 0)) bad("'width' must be positive");
    return WindField::gaussian_vortex(vec2(j["center"], "center"), number(j["amplitude"], "amplitude"), width);
  }
  if (type == "superposition") {
    only_keys(j, {"type", "parts"}, "wind");
    if (!j.contains("parts") || !j["parts"].is_array() || j["parts"].empty()) bad("superposition needs 'parts'");
    std::vector<WindField> parts;
    for (const auto& p : j["parts"]) parts.push_back(wind_from_json(p));
    return WindField::superposition(std::move(parts));
  }
  bad("unknown wind type '" + type + "'");
}

json to_json(const WindField& w) {
  switch (w.kind()) {
    case WindField::Kind::Constant: return {{"type", "constant"}, {"value", arr(w.vector_param())}};
    case WindField::Kind::LinearShear: {
      const Mat2& A = w.matrix_param();
      return {{"type", "linear_shear"},
              {"A", json::array({arr(A.row(0).transpose()), arr(A.row(1).transpose())})},
              {"b", arr(w.vector_param())}};
    }
    case WindField::Kind::GaussianVortex:
      return {{"type", "gaussian_vortex"},
              {"center", arr(w.vector_param())},
              {"amplitude", w.amplitude()},
              {"width", w.width()}};
    case WindField::Kind::Superposition: {
      json parts = json::array();
      for (const auto& p : w.parts()) parts.push_back(to_json(p));
      return {{"type", "superposition"}, {"parts", parts}};
    }
  }
  return {};
}

Scenario parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    bad(std::string("malformed JSON: ") + e.what());
  }
  only_keys(j,
            {"name", "x_O", "x_D", "vbar", "wind", "N", "quadrature", "tol_abs", "tol_rel", "max_iter", "damping",
             "speed_floor", "h", "ell", "K", "seed", "violation_samples", "fd_samples", "study_radii",
             "study_samples"},
            "scenario");
  Scenario sc;
  try {
    if (j.contains("name")) {
      if (!j["name"].is_string()) bad("'name' must be a string");
      sc.name = j["name"];
    }
    for (const char* k : {"x_O", "x_D", "vbar", "wind"})
      if (!j.contains(k)) bad(std::string("missing required key '") + k + "'");
    sc.x_O = vec2(j["x_O"], "x_O");
    sc.x_D = vec2(j["x_D"], "x_D");
    if (!(sc.L_tilde() > 0)) bad("x_O and x_D coincide");
    sc.vbar = number(j["vbar"], "vbar");
    if (!(sc.vbar > 0)) bad("'vbar' must be positive");
    sc.wind = wind_from_json(j["wind"]);
    if (j.contains("N")) sc.N = int(integer(j["N"], "N"));
    if (sc.N < 2) bad("'N' must be >= 2");
    if (j.contains("quadrature")) sc.solver.quadrature = int(integer(j["quadrature"], "quadrature"));
    if (sc.solver.quadrature < 1) bad("'quadrature' must be >= 1");
    if (j.contains("tol_abs")) sc.solver.tol_abs = number(j["tol_abs"], "tol_abs");
    if (j.contains("tol_rel")) sc.solver.tol_rel = number(j["tol_rel"], "tol_rel");
    if (j.contains("max_iter")) sc.solver.max_iter = int(integer(j["max_iter"], "max_iter"));
    if (sc.solver.max_iter < 1) bad("'max_iter' must be >= 1");
    if (j.contains("speed_floor")) sc.solver.speed_floor = number(j["speed_floor"], "speed_floor");
    if (j.contains("damping")) {
      if (!j["damping"].is_string()) bad("'damping' must be a string");
      const std::string d = j["damping"];
      if (d == "none") sc.solver.damping = Damping::None;
      else if (d == "armijo") sc.solver.damping = Damping::ArmijoHalving;
      else bad("'damping' must be \"none\" or \"armijo\"");
    }
    if (j.contains("h")) sc.h = number(j["h"], "h");
    if (!(sc.h > 0)) bad("'h' must be positive");
    if (j.contains("ell")) sc.ell = number(j["ell"], "ell");
    if (sc.ell > 0 && sc.ell < sc.h * std::sqrt(2.0)) bad("'ell' must be at least sqrt(2) h");
    if (j.contains("K")) sc.K = int(integer(j["K"], "K"));
    if (sc.K < 1) bad("'K' must be >= 1");
    if (j.contains("seed")) {
      if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long>() >= 0))
        bad("'seed' must be a non-negative integer");
      sc.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("violation_samples")) sc.violation_samples = integer(j["violation_samples"], "violation_samples");
    if (sc.violation_samples < 0) bad("'violation_samples' must be >= 0");
    if (j.contains("fd_samples")) sc.fd_samples = int(integer(j["fd_samples"], "fd_samples"));
    if (sc.fd_samples < 0) bad("'fd_samples' must be >= 0");
    if (j.contains("study_radii")) {
      if (!j["study_radii"].is_array()) bad("'study_radii' must be an array");
      for (const auto& r : j["study_radii"]) {
        const double v = number(r, "study_radii");
        if (!(v > 0)) bad("'study_radii' entries must be positive");
        sc.study_radii.push_back(v);
      }
      std::sort(sc.study_radii.begin(), sc.study_radii.end());
    }
    if (j.contains("study_samples")) sc.study_samples = int(integer(j["study_samples"], "study_samples"));
    if (sc.study_samples < 1) bad("'study_samples' must be >= 1");
  } catch (const json::exception& e) {
    bad(e.what());
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigParse, "config: cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

json to_json(const State& z) {
  json nodes = json::array();
  for (int i = 0; i <= z.N(); ++i) nodes.push_back(arr(z.path.node(i)));
  return {{"L", z.L},
          {"N", z.N()},
          {"nodes", nodes},
          {"feasible", z.feasible},
          {"feasibility_residual", z.feasibility_residual()}};
}

json to_json(const WindBounds& wb) {
  return {{"c0", wb.c0},
          {"c1", wb.c1},
          {"c2", wb.c2},
          {"c3", wb.c3},
          {"method", to_string(wb.method)},
          {"safety_factor", wb.safety_factor},
          {"domain",
           {{"focus_a", arr(wb.domain.focus_a)},
            {"focus_b", arr(wb.domain.focus_b)},
            {"major_sum", wb.domain.major_sum}}}};
}

json to_json(const BoundSet& bs) {
  json values = {{"c0", bs.c0},
                 {"c1", bs.c1},
                 {"c2", bs.c2},
                 {"c3", bs.c3},
                 {"v_low", bs.v_low},
                 {"v_high", bs.v_high},
                 {"L_tilde", bs.L_tilde},
                 {"L_low", bs.L_low},
                 {"L_high", bs.L_high},
                 {"L_star", bs.L_star},
                 {"R", bs.R},
                 {"alpha0", bs.alpha0},
                 {"alpha1", bs.alpha1},
                 {"beta0", bs.beta0},
                 {"beta1", bs.beta1},
                 {"beta2", bs.beta2},
                 {"Gamma", bs.Gamma},
                 {"B_upper", bs.B_upper},
                 {"beta_hat1", bs.beta_hat1},
                 {"beta_hat2", bs.beta_hat2},
                 {"B_hat", bs.B_hat},
                 {"B_lower_est", bs.B_lower_est},
                 {"c", bs.c},
                 {"u", arr(bs.u)},
                 {"kappa", bs.kappa}};
  for (int i = 0; i < 6; ++i) values["gamma" + std::to_string(i)] = bs.gamma[i];
  json prov = json::object();
  for (const auto& [k, p] : bs.provenance) prov[k] = to_string(p);
  return {{"vbar", bs.vbar},
          {"derivative_bounds_valid", bs.derivative_bounds_valid},
          {"wind_bounds_sampled", bs.wind_bounds_sampled},
          {"constants", values},
          {"provenance", prov}};
}

json to_json(const OmegaReport& r) {
  return {{"omega1", r.omega1}, {"omega2", r.omega2}, {"omega", r.omega},
          {"R_C", r.R_C},       {"binding", r.binding}, {"found", r.found},
          {"provenance", "estimated"}};
}

json to_json(const ViolationReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks)
    checks.push_back({{"name", c.name}, {"samples", c.samples}, {"violations", c.violations}, {"max_ratio", c.max_ratio}});
  return {{"checks", checks}, {"rejected", r.rejected}};
}

json to_json(const GraphStats& s) {
  return {{"nodes", s.nodes},
          {"edges", s.edges},
          {"h", s.h},
          {"ell", s.ell},
          {"min_edge_cost", s.min_cost},
          {"max_edge_cost", s.max_cost}};
}

json to_json(const DerivativeCheck& d) {
  json errs = json::object();
  for (std::size_t k = 0; k < d.max_rel_error.size(); ++k) errs[DerivativeCheck::names[k]] = d.max_rel_error[k];
  return {{"samples", d.samples}, {"max_rel_error", errs}};
}

ScenarioDomain scenario_domain(const Scenario& sc) {
  ScenarioDomain out;
  double c0 = 0.0;
  for (int it = 1; it <= 20; ++it) {
    out.iterations = it;
    out.omega = ellipse_domain(sc.x_O, sc.x_D, sc.vbar, c0);
    out.bounds = compute_bounds(sc.wind, out.omega);
    if (!(out.bounds.c0 < sc.vbar))
      throw Error(ErrorCode::WindExceedsAirspeed, "scenario: wind bound reaches the airspeed");
    if (out.bounds.c0 <= c0 * (1.0 + 1e-9)) {
      out.converged = true;
      break;
    }
    c0 = out.bounds.c0;
  }
  // keep the bound consistent with the ellipse it describes
  out.bounds.c0 = std::max(out.bounds.c0, c0);
  return out;
}

Optimum find_optimum(const Scenario& sc, const Ellipse& omega) {
  Optimum best;
  try {
    GlobalOptions go;
    go.h = sc.h;
    go.ell = sc.ell;
    go.K = sc.K;
    go.N = sc.N;
    go.solver = sc.solver;
    const GlobalResult res = global_optimize(sc.wind, sc.vbar, sc.x_O, sc.x_D, omega, go);
    if (const CandidatePath* c = res.best()) {
      best.chi = c->solution;
      best.T = c->refined_T;
      best.source = "global";
      best.status = SolveStatus::Converged;
      return best;
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Disconnected) throw;
  }
  KKTIterate chi0;
  chi0.z = straight_line(sc.x_O, sc.x_D, sc.N);
  chi0.lambda = Multiplier(sc.N);
  SolveOptions opts = sc.solver;
  opts.damping = Damping::ArmijoHalving;
  const SolveReport rep = solve(chi0, sc.wind, sc.vbar, opts);
  best.chi = rep.final;
  best.T = travel_time(rep.final.z, sc.wind, sc.vbar, opts.quadrature);
  best.source = "straight";
  best.status = rep.status;
  return best;
}

std::vector<double> default_study_radii(const Scenario& sc) {
  std::vector<double> r;
  for (double f : {0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5}) r.push_back(f * sc.L_tilde());
  return r;
}

StudyResult convergence_study(const Scenario& sc, const KKTIterate& chi_star, const std::vector<double>& radii,
                              int samples, std::uint64_t seed) {
  StudyResult out;
  const int N = chi_star.z.N();
  const double Lt = sc.L_tilde();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  SolveOptions opts = sc.solver;
  opts.damping = Damping::None;

  std::vector<double> sorted = radii;
  std::sort(sorted.begin(), sorted.end());
  bool intact = true;
  for (double r : sorted) {
    bool all_ok = true;
    for (int s = 0; s < samples; ++s) {
      // a few smooth modes plus a length change, scaled to Yinf size r
      Direction d(N);
      d.dL = U(rng);
      std::vector<std::pair<int, Vec2>> modes;
      for (int m = 0; m < 3; ++m) modes.emplace_back(m + 1, Vec2(U(rng), U(rng)) / double(m + 1));
      for (int i = 1; i < N; ++i)
        for (const auto& [k, a] : modes) d.dnodes[i - 1] += a * std::sin(std::numbers::pi * k * double(i) / N);
      const double zn = norm(d, NormKind::Zinf);
      for (auto& p : d.dnodes) p *= r / zn;
      d.dL *= r / zn;

      KKTIterate chi0;
      chi0.z = displaced(chi_star.z, d);
      chi0.lambda = Multiplier(N);
      StudyRow row;
      row.radius = r;
      row.sample = s;
      const SolveReport rep = solve(chi0, sc.wind, sc.vbar, opts);
      row.iterations = rep.iterations();
      row.status = to_string(rep.status);
      if (rep.status == SolveStatus::Converged) {
        const Direction dz = difference(rep.final.z, chi_star.z);
        const Multiplier dl(Vec(rep.final.lambda.values - chi_star.lambda.values));
        row.reached_optimum = norm(dz, dl, NormKind::Y2) <= 1e-6 * Lt;
        if (!row.reached_optimum) row.status = "other-stationary-point";
      }
      for (std::size_t k = 0; k + 1 < rep.iterates.size(); ++k) {
        const double e0 = rep.iterates[k].dist_to_final, e1 = rep.iterates[k + 1].dist_to_final;
        if (e0 > 0) row.max_ratio = std::max(row.max_ratio, e1 / e0);
      }
      all_ok = all_ok && row.reached_optimum && row.max_ratio < 1.0;
      out.rows.push_back(row);
    }
    if (intact && all_ok) out.R_empirical = r;
    else intact = false;
  }
  return out;
}

std::string study_csv(const StudyResult& r) {
  std::ostringstream os;
  os << "start_radius,sample,iterations,reached_optimum,observed_ratio,status\n";
  char buf[256];
  for (const auto& row : r.rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%d,%d,%d,%.17g,%s\n", row.radius, row.sample, row.iterations,
                  row.reached_optimum ? 1 : 0, row.max_ratio, row.status.c_str());
    os << buf;
  }
  return os.str();
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace zermelo
