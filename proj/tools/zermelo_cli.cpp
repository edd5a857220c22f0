// Command-line front end: zermelo {solve|global|verify|bounds|study} --config FILE --out DIR
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include <Eigen/Core>

#include "CLI11.hpp"
#include "json.hpp"
#include "zermelo/scenario.hpp"

using namespace zermelo;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kParse = 2, kInfeasible = 3, kSolver = 4 };

struct Args {
  std::string config;
  std::string out = ".";
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool quiet = false;
};

// Everything a run produces; written in one go at the end.
struct Output {
  std::map<std::string, std::string> files;
  json summary = json::object();
  std::string message;

  void add_json(const std::string& name, const json& j) { files[name] = j.dump(2) + "\n"; }
};

std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json versions() {
  return {{"zermelo", ZERMELO_VERSION},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                       "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"compiler", __VERSION__}};
}

json trajectory_doc(const State& z, const Scenario& sc) {
  json j = to_json(z);
  j["T"] = travel_time(z, sc.wind, sc.vbar, sc.solver.quadrature);
  return j;
}

int do_solve(const Scenario& sc, const ScenarioDomain&, Output& out) {
  KKTIterate chi0;
  chi0.z = straight_line(sc.x_O, sc.x_D, sc.N);
  chi0.lambda = Multiplier(sc.N);
  const SolveReport rep = solve(chi0, sc.wind, sc.vbar, sc.solver);
  out.files["iterates.csv"] = iterates_csv(rep);
  out.files["trajectory.csv"] = to_csv(rep.final.z);
  json traj = trajectory_doc(rep.final.z, sc);
  traj["status"] = to_string(rep.status);
  traj["iterations"] = rep.iterations();
  out.add_json("trajectory.json", traj);
  out.summary = {{"status", to_string(rep.status)}, {"iterations", rep.iterations()}, {"T", traj["T"]}};
  if (rep.status != SolveStatus::Converged) {
    out.message = "solver did not converge: " + std::string(to_string(rep.status)) + " " + rep.message;
    return kSolver;
  }
  return kOk;
}

int do_global(const Scenario& sc, const ScenarioDomain& dom, Output& out) {
  GlobalOptions go;
  go.h = sc.h;
  go.ell = sc.ell;
  go.K = sc.K;
  go.N = sc.N;
  go.solver = sc.solver;
  const GlobalResult res = global_optimize(sc.wind, sc.vbar, sc.x_O, sc.x_D, dom.omega, go);
  out.files["candidates.csv"] = candidates_csv(res);
  out.add_json("graph.json", to_json(res.stats));
  const CandidatePath* best = res.best();
  out.summary = {{"candidates", res.ranked.size()}, {"graph", to_json(res.stats)}};
  if (!best) {
    out.message = "no candidate converged";
    return kSolver;
  }
  out.files["best_trajectory.csv"] = to_csv(best->solution.z);
  out.add_json("best_trajectory.json", trajectory_doc(best->solution.z, sc));
  out.summary["best_T"] = best->refined_T;
  out.summary["distinct_optima"] = res.distinct_optima(1e-4 * sc.L_tilde() / sc.vbar);
  return kOk;
}

bool optimum_or_fail(const Scenario& sc, const ScenarioDomain& dom, Optimum& opt, Output& out) {
  opt = find_optimum(sc, dom.omega);
  out.summary["optimum"] = {{"T", opt.T}, {"source", opt.source}, {"status", to_string(opt.status)}};
  if (opt.status != SolveStatus::Converged) {
    out.message = "could not compute an optimum: " + std::string(to_string(opt.status));
    return false;
  }
  return true;
}

int do_verify(const Scenario& sc, const ScenarioDomain& dom, Output& out) {
  const FieldCheck fc = verify_field(sc.wind, 200, sc.seed);
  const DerivativeCheck dc = check_derivatives(sc.wind, sc.vbar, sc.x_O, sc.x_D, sc.N, sc.fd_samples, sc.seed + 1,
                                               sc.solver.quadrature);
  json deriv = to_json(dc);
  deriv["wind_field"] = {{"samples", fc.samples},
                         {"step", fc.step},
                         {"max_rel_error", {fc.max_rel_error[0], fc.max_rel_error[1], fc.max_rel_error[2]}},
                         {"passed", fc.passed}};
  out.add_json("derivatives.json", deriv);
  out.summary["derivatives"] = deriv;

  Optimum opt;
  if (!optimum_or_fail(sc, dom, opt, out)) return kSolver;
  const BoundSet bs = analyze_optimum(opt.chi, sc.wind, sc.vbar, dom.bounds, sc.solver.quadrature);
  ViolationOptions vo;
  vo.Q = sc.solver.quadrature;
  const ViolationReport vr = violation_search(bs, sc.wind, opt.chi, dom.omega, sc.violation_samples, sc.seed + 2, vo);
  std::ostringstream csv;
  csv << "check,samples,violations,max_ratio\n";
  char buf[256];
  for (const auto& c : vr.checks) {
    std::snprintf(buf, sizeof buf, "%s,%ld,%ld,%.17g\n", c.name.c_str(), c.samples, c.violations, c.max_ratio);
    csv << buf;
  }
  out.files["violations.csv"] = csv.str();
  json vj = to_json(vr);
  vj["R"] = bs.R;

  // harness self-test: with Γ̄ shrunk 1000x the search has to find something
  ViolationOptions control = vo;
  control.Gamma_scale = 1e-3;
  const long control_budget = std::max(1000L, sc.violation_samples / 10);
  const ViolationReport cr = violation_search(bs, sc.wind, opt.chi, dom.omega, control_budget, sc.seed + 5, control);
  const ViolationCheck* cg = cr.find("Gamma");
  vj["control"] = {{"Gamma_scale", control.Gamma_scale},
                   {"samples", cg ? cg->samples : 0},
                   {"violations", cg ? cg->violations : 0},
                   {"detected", cg && cg->violations > 0}};
  out.add_json("violations.json", vj);
  out.summary["violations"] = vr.total_violations({});
  out.summary["control_detected"] = cg && cg->violations > 0;
  return kOk;
}

int do_bounds(const Scenario& sc, const ScenarioDomain& dom, Output& out) {
  Optimum opt;
  if (!optimum_or_fail(sc, dom, opt, out)) return kSolver;
  const BoundSet bs = analyze_optimum(opt.chi, sc.wind, sc.vbar, dom.bounds, sc.solver.quadrature);
  const OmegaReport om = omegas_and_radius(bs);

  // witnesses at the optimum for a handful of random inputs
  std::mt19937_64 rng(sc.seed + 3);
  std::normal_distribution<double> G(0.0, 1.0);
  double worst_residual = 0, worst_ratio_margin = std::numeric_limits<double>::infinity();
  bool witnesses_ok = true;
  for (int s = 0; s < 10; ++s) {
    Vec rhs(sc.N), lam(sc.N);
    for (int i = 0; i < sc.N; ++i) {
      rhs(i) = G(rng);
      lam(i) = G(rng);
    }
    try {
      const RegularityWitness rw = regularity_witness(opt.chi.z, rhs, bs.u, bs.c);
      worst_residual = std::max(worst_residual, rw.residual);
      witnesses_ok = witnesses_ok && rw.satisfied;
      if (bs.R < bs.c) {
        const InfSupWitness iw = infsup_witness(opt.chi.z, Multiplier(lam), bs.u, bs.c, bs.R, bs.kappa);
        worst_ratio_margin = std::min(worst_ratio_margin, iw.ratio - iw.kappa);
        witnesses_ok = witnesses_ok && iw.satisfied;
      }
    } catch (const Error& e) {
      witnesses_ok = false;
      out.message = e.what();
    }
  }
  json doc = to_json(bs);
  doc["omegas"] = to_json(om);
  doc["wind_bounds"] = to_json(dom.bounds);
  doc["domain_iterations"] = dom.iterations;
  doc["domain_converged"] = dom.converged;
  doc["optimum"] = {{"T", opt.T}, {"L", opt.chi.z.L}, {"source", opt.source}};
  doc["witnesses"] = {{"satisfied", witnesses_ok},
                      {"max_regularity_residual", worst_residual},
                      {"min_infsup_margin", std::isfinite(worst_ratio_margin) ? json(worst_ratio_margin) : json()}};
  out.add_json("bounds.json", doc);
  out.summary["R"] = bs.R;
  out.summary["R_C"] = om.R_C;
  out.summary["binding"] = om.binding;
  return kOk;
}

int do_study(const Scenario& sc, const ScenarioDomain& dom, Output& out) {
  Optimum opt;
  if (!optimum_or_fail(sc, dom, opt, out)) return kSolver;
  const std::vector<double> radii = sc.study_radii.empty() ? default_study_radii(sc) : sc.study_radii;
  const StudyResult res = convergence_study(sc, opt.chi, radii, sc.study_samples, sc.seed + 4);
  out.files["study.csv"] = study_csv(res);
  json doc = {{"R_empirical", res.R_empirical}, {"radii", radii}, {"samples_per_radius", sc.study_samples}};
  try {
    const BoundSet bs = analyze_optimum(opt.chi, sc.wind, sc.vbar, dom.bounds, sc.solver.quadrature);
    const OmegaReport om = omegas_and_radius(bs);
    doc["R_C_estimate"] = om.R_C;
    doc["binding"] = om.binding;
  } catch (const Error& e) {
    doc["R_C_estimate"] = nullptr;
    doc["binding"] = e.what();
  }
  out.add_json("study.json", doc);
  out.summary["R_empirical"] = res.R_empirical;
  return kOk;
}

int run(const std::string& sub, const Args& args) {
  const auto t0 = std::chrono::steady_clock::now();
  Output out;
  json manifest = {{"subcommand", sub}, {"config", args.config}, {"versions", versions()}};
  int code = kOk;

  std::string text;
  {
    std::ifstream in(args.config, std::ios::binary);
    if (!in) {
      std::cerr << "error: cannot read config " << args.config << "\n";
      return kParse;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  manifest["config_hash"] = "fnv1a64:" + hex64(fnv1a64(text));

  try {
    Scenario sc = parse_scenario(text);
    if (args.seed_given) sc.seed = args.seed;
    manifest["seed"] = sc.seed;
    manifest["scenario"] = sc.name;
    const ScenarioDomain dom = scenario_domain(sc);
    if (sub == "solve") code = do_solve(sc, dom, out);
    else if (sub == "global") code = do_global(sc, dom, out);
    else if (sub == "verify") code = do_verify(sc, dom, out);
    else if (sub == "bounds") code = do_bounds(sc, dom, out);
    else code = do_study(sc, dom, out);
  } catch (const Error& e) {
    out.message = e.what();
    switch (e.code()) {
      case ErrorCode::ConfigParse: code = kParse; break;
      case ErrorCode::WindExceedsAirspeed: code = kInfeasible; break;
      default: code = kSolver; break;
    }
  }

  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  manifest["exit_code"] = code;
  manifest["message"] = out.message;
  manifest["summary"] = out.summary;
  manifest["timings"] = {{"total_seconds", secs}};
  json names = json::array();
  for (const auto& [name, _] : out.files) names.push_back(name);
  manifest["files"] = names;

  std::error_code ec;
  fs::create_directories(args.out, ec);
  out.add_json("manifest.json", manifest);
  for (const auto& [name, body] : out.files) {
    std::ofstream f(fs::path(args.out) / name, std::ios::binary);
    f << body;
    if (!f) {
      std::cerr << "error: cannot write " << (fs::path(args.out) / name).string() << "\n";
      if (code == kOk) code = 1;
    }
  }

  if (!args.quiet) {
    std::cout << sub << ": exit " << code;
    if (!out.message.empty()) std::cout << " (" << out.message << ")";
    std::cout << "\n" << out.summary.dump(2) << "\n";
  } else if (code != kOk && !out.message.empty()) {
    std::cerr << out.message << "\n";
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-optimal flight paths in a planar wind field"};
  app.require_subcommand(1);
  Args args;
  std::string chosen;
  for (const char* name : {"solve", "global", "verify", "bounds", "study"}) {
    static const std::map<std::string, std::string> help = {
        {"solve", "Newton-KKT solve from the straight line"},
        {"global", "graph search plus refinement of the K best paths"},
        {"verify", "finite-difference and bound-violation checks"},
        {"bounds", "theoretical constants at the optimum"},
        {"study", "contraction rates over a ladder of start radii"}};
    CLI::App* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("--config", args.config, "scenario JSON")->required();
    sub->add_option("--out", args.out, "output directory");
    sub->add_option("--seed", args.seed, "override the scenario seed");
    sub->add_flag("--quiet", args.quiet, "no summary on stdout");
    sub->callback([&chosen, name]() { chosen = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kParse;
  }
  for (CLI::App* sub : app.get_subcommands())
    if (sub->count("--seed")) args.seed_given = true;
  return run(chosen, args);
}
