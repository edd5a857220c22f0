// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Tolerances are fixed here.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "zermelo/scenario.hpp"

using namespace zermelo;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Scenario scenario(const char* name) { return load_scenario(std::string(CONFIG_DIR) + "/" + name + ".json"); }

GlobalOptions options_of(const Scenario& sc, int N) {
  GlobalOptions o;
  o.h = sc.h;
  o.ell = sc.ell;
  o.K = sc.K;
  o.N = N;
  o.solver = sc.solver;
  return o;
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("FAILED ") + what;
    }
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Max distance of the interior nodes from the chord.
double chord_offset(const State& z) {
  const Vec2 a = z.path.x_O, d = (z.path.x_D - a).normalized();
  double m = 0;
  for (int i = 0; i <= z.N(); ++i) {
    const Vec2 r = z.path.node(i) - a;
    m = std::max(m, std::abs(d.x() * r.y() - d.y() * r.x()));
  }
  return m;
}

// ---------------------------------------------------------------------------

Outcome analytic_optima() {
  Outcome o;
  struct Case {
    const char* cfg;
    std::function<double(const Scenario&)> exact;
    double rel_tol;
    bool collinear;
  };
  const std::vector<Case> cases = {
      {"zero_wind", [](const Scenario& s) { return s.L_tilde() / s.vbar; }, 1e-9, true},
      {"tailwind",
       [](const Scenario& s) { return s.L_tilde() / (s.vbar + s.wind.eval(s.x_O).norm()); }, 1e-9, false},
      {"crosswind",
       [](const Scenario& s) {
         const double c = s.wind.eval(s.x_O).norm();
         return s.L_tilde() / std::sqrt(s.vbar * s.vbar - c * c);
       },
       1e-6, false}};
  for (const auto& c : cases) {
    const auto t0 = Clock::now();
    const Scenario sc = scenario(c.cfg);
    const Optimum opt = find_optimum(sc, scenario_domain(sc).omega);
    const double secs = seconds_since(t0);
    const double exact = c.exact(sc);
    const double rel = std::abs(opt.T - exact) / exact;
    o.check(opt.status == SolveStatus::Converged, std::string(c.cfg) + " did not converge");
    o.check(rel <= c.rel_tol, std::string(c.cfg) + " T error " + fmt("%.2e", rel));
    o.check(secs < 1.0, std::string(c.cfg) + " took " + fmt("%.2fs", secs));
    if (c.collinear) {
      const double off = chord_offset(opt.chi.z);
      o.check(off <= 1e-8 * sc.L_tilde(), std::string(c.cfg) + " offset " + fmt("%.2e", off));
    }
    o.note(std::string(c.cfg) + " rel " + fmt("%.1e", rel) + " in " + fmt("%.3fs", secs));
  }
  return o;
}

Outcome derivative_consistency() {
  Outcome o;
  const auto t0 = Clock::now();
  const Scenario sc = scenario("vortex");
  const DerivativeCheck d = check_derivatives(sc.wind, sc.vbar, sc.x_O, sc.x_D, sc.N, 200, sc.seed);
  const double secs = seconds_since(t0);
  const std::array<double, 5> tol{1e-7, 1e-5, 1e-3, 1e-7, 1e-5};
  o.check(d.samples == 200, "sample count");
  for (int i = 0; i < 5; ++i) {
    o.check(d.max_rel_error[i] <= tol[i], std::string(DerivativeCheck::names[i]));
    o.note(std::string(DerivativeCheck::names[i]) + " " + fmt("%.1e", d.max_rel_error[i]));
  }
  o.check(secs < 30.0, "runtime " + fmt("%.1fs", secs));
  return o;
}

Outcome bound_verification() {
  Outcome o;
  const auto t0 = Clock::now();
  const Scenario sc = scenario("vortex");
  const ScenarioDomain dom = scenario_domain(sc);
  const Optimum opt = find_optimum(sc, dom.omega);
  const BoundSet bs = analyze_optimum(opt.chi, sc.wind, sc.vbar, dom.bounds);
  const ViolationReport rep = violation_search(bs, sc.wind, opt.chi, dom.omega, 100000, sc.seed);
  const std::vector<std::string> names{"alpha", "beta", "gamma", "Gamma", "B_upper"};
  for (const auto& n : names) {
    const ViolationCheck* c = rep.find(n);
    o.check(c && c->samples > 0, n + " not sampled");
    if (!c) continue;
    o.check(c->violations == 0, n + " " + std::to_string(c->violations) + " violations");
    o.note(n + " " + fmt("%.2g", c->max_ratio));
  }
  ViolationOptions ctl;
  ctl.Gamma_scale = 1e-3;
  const ViolationReport bad = violation_search(bs, sc.wind, opt.chi, dom.omega, 10000, sc.seed + 5, ctl);
  const long caught = bad.find("Gamma")->violations;
  o.check(caught >= 1, "control found nothing");
  o.note("control " + std::to_string(caught) + "/" + std::to_string(bad.find("Gamma")->samples));
  const double secs = seconds_since(t0);
  o.check(secs < 120.0, "runtime " + fmt("%.1fs", secs));
  o.note(fmt("%.1fs", secs));
  return o;
}

Outcome kkt_structure() {
  Outcome o;
  // the discrete multiplier vanishes only as the grid is refined
  const int N = 384;
  int optima = 0;
  double worst_h = 0, worst_lam = 0, min_eig = std::numeric_limits<double>::infinity();
  for (const char* name : {"zero_wind", "tailwind", "crosswind", "vortex", "midpoint_vortex"}) {
    const Scenario sc = scenario(name);
    const ScenarioDomain dom = scenario_domain(sc);
    const GlobalResult res = global_optimize(sc.wind, sc.vbar, sc.x_O, sc.x_D, dom.omega, options_of(sc, N));
    const double Lt = sc.L_tilde(), c0 = dom.bounds.c0;
    for (const auto& c : res.ranked) {
      if (!c.refined) continue;
      ++optima;
      const KKTIterate& chi = c.solution;
      const double h = constraint(chi.z).cwiseAbs().maxCoeff();
      const double lam = chi.lambda.sup();
      const double eig = reduced_hessian_min_eig(chi, sc.wind, sc.vbar, sc.solver.quadrature);
      const double L = chi.z.L;
      worst_h = std::max(worst_h, h);
      worst_lam = std::max(worst_lam, lam);
      min_eig = std::min(min_eig, eig);
      o.check(h <= 1e-8, std::string(name) + " |h| " + fmt("%.1e", h));
      o.check(lam <= 1e-8, std::string(name) + " |lambda| " + fmt("%.1e", lam));
      o.check(eig > 0, std::string(name) + " reduced Hessian " + fmt("%.2e", eig));
      o.check(Lt <= L && L <= Lt * (sc.vbar + c0) / (sc.vbar - c0) + 1e-8 * Lt,
              std::string(name) + " length " + fmt("%.6f", L));
    }
  }
  o.check(optima > 0, "no converged optima");
  o.note(std::to_string(optima) + " optima at N=" + std::to_string(N) + ", max|h| " + fmt("%.1e", worst_h) +
         ", max|lambda| " + fmt("%.1e", worst_lam) + ", min eig " + fmt("%.2e", min_eig));
  return o;
}

Outcome contraction() {
  Outcome o;
  const Scenario sc = scenario("vortex");
  const ScenarioDomain dom = scenario_domain(sc);
  const Optimum opt = find_optimum(sc, dom.omega);
  const StudyResult study = convergence_study(sc, opt.chi, default_study_radii(sc), sc.study_samples, sc.seed);
  o.check(study.R_empirical > 0, "empty basin");
  o.note("basin " + fmt("%.3g", study.R_empirical));

  SolveOptions undamped = sc.solver;
  undamped.damping = Damping::None;

  // starts inside the basin: the optimum plus a smooth bump whose Yinf size is
  // a fraction of the basin radius
  std::mt19937_64 g(sc.seed);
  std::uniform_real_distribution<double> U(-1, 1);
  double worst = 0;
  int checked = 0;
  for (int s = 0; s < 8; ++s) {
    KKTIterate chi = opt.chi;
    const int N = chi.z.N();
    const int mode = 1 + s % 3;
    Direction bump(N);
    bump.dL = 0.2 * U(g);
    const Vec2 a(U(g), U(g));
    for (int i = 1; i < N; ++i) bump.dnodes[i - 1] = a * std::sin(mode * std::numbers::pi * i / N);
    const double radius = (0.1 + 0.4 * std::abs(U(g))) * study.R_empirical;
    chi.z = displaced(chi.z, bump, radius / norm(bump, NormKind::Yinf));
    const SolveReport rep = solve(chi, sc.wind, sc.vbar, undamped);
    if (rep.status != SolveStatus::Converged) {
      o.check(false, "start " + std::to_string(s) + " " + to_string(rep.status));
      continue;
    }
    if (rep.iterations() < 3) continue;
    ++checked;
    const ContractionDiagnostics d = contraction_diagnostics(rep);
    for (double r : d.ratios) worst = std::max(worst, r);
    o.check(std::all_of(d.ratios.begin(), d.ratios.end(), [](double r) { return r < 1.0; }),
            "start " + std::to_string(s) + " ratio >= 1");
    const std::size_t n = d.ratios.size();
    o.check(n >= 2 && d.ratios[n - 1] < d.ratios[n - 2], "start " + std::to_string(s) + " tail not decreasing");
  }
  o.check(checked >= 4, "only " + std::to_string(checked) + " starts long enough to measure");
  o.note(std::to_string(checked) + " starts, max ratio " + fmt("%.3f", worst));

  SolveOptions strict = undamped;
  strict.tol_abs = 1e-10;
  strict.tol_rel = 0.0;
  const SolveReport rep =
      solve({straight_line(sc.x_O, sc.x_D, sc.N), Multiplier(sc.N)}, sc.wind, sc.vbar, strict);
  o.check(rep.status == SolveStatus::Converged && rep.iterations() <= 10,
          "straight start: " + std::string(to_string(rep.status)) + " after " + std::to_string(rep.iterations()));
  o.check(rep.iterates.back().residual <= 1e-10, "straight start residual");
  o.note("straight start " + std::to_string(rep.iterations()) + " iterations to " +
         fmt("%.1e", rep.iterates.back().residual));
  return o;
}

Outcome witnesses() {
  Outcome o;
  std::mt19937_64 g(2024);
  std::normal_distribution<double> n;
  double worst_res = 0, worst_margin = std::numeric_limits<double>::infinity();
  for (const char* name : {"crosswind", "vortex", "midpoint_vortex"}) {
    const Scenario sc = scenario(name);
    const ScenarioDomain dom = scenario_domain(sc);
    const Optimum opt = find_optimum(sc, dom.omega);
    const BoundSet bs = analyze_optimum(opt.chi, sc.wind, sc.vbar, dom.bounds);
    const State& z = opt.chi.z;
    const int N = z.N();
    for (int s = 0; s < 100; ++s) {
      Vec rhs(N);
      for (int i = 0; i < N; ++i) rhs(i) = n(g);
      const RegularityWitness w = regularity_witness(z, rhs, bs.u, bs.c);
      worst_res = std::max(worst_res, w.residual / std::max(1.0, rhs.cwiseAbs().maxCoeff()));
      o.check(w.residual <= 1e-10 * std::max(1.0, rhs.cwiseAbs().maxCoeff()), std::string(name) + " regularity");
    }
    o.check(bs.R < bs.c && bs.kappa > 0, std::string(name) + " no inf-sup constant");
    for (int s = 0; s < 100; ++s) {
      Multiplier lam(N);
      const double shift = (s % 3 == 0) ? 5.0 * n(g) : 0.0;
      for (int i = 0; i < N; ++i) lam.values(i) = n(g) + shift;
      const InfSupWitness w = infsup_witness(z, lam, bs.u, bs.c, bs.R, bs.kappa);
      worst_margin = std::min(worst_margin, w.ratio / bs.kappa);
      o.check(w.ratio >= bs.kappa, std::string(name) + " inf-sup ratio " + fmt("%.3g", w.ratio));
    }
  }
  o.note("max regularity residual " + fmt("%.1e", worst_res) + ", min ratio/kappa " + fmt("%.3f", worst_margin));
  return o;
}

Outcome yen_correctness() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 g(77);
  std::uniform_real_distribution<double> U(0, 1);
  long paths = 0, runs = 0;
  int graphs = 0;
  while (graphs < 100) {
    const int n = 3 + int(U(g) * 8);  // 3..10 nodes
    const double p = 0.2 + 0.25 * U(g);
    const bool ties = U(g) < 0.5;
    std::vector<std::tuple<int, int, double>> e;
    std::vector<std::vector<std::pair<int, double>>> adj(n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        if (a != b && U(g) < p) {
          const double w = ties ? 1.0 + std::floor(3 * U(g)) : 0.05 + U(g);
          e.emplace_back(a, b, w);
          adj[a].push_back({b, w});
        }
    // exhaustive enumeration of simple paths
    std::vector<std::pair<double, std::vector<int>>> all;
    std::vector<int> path{0};
    std::vector<char> on(n, 0);
    on[0] = 1;
    std::function<void(double)> dfs = [&](double cost) {
      if (path.back() == n - 1) {
        all.push_back({cost, path});
        return;
      }
      for (const auto& [v, w] : adj[path.back()]) {
        if (on[v]) continue;
        on[v] = 1;
        path.push_back(v);
        dfs(cost + w);
        path.pop_back();
        on[v] = 0;
      }
    };
    dfs(0.0);
    if (all.empty()) continue;
    std::sort(all.begin(), all.end());
    ++graphs;
    const int P = int(all.size());
    const FlightGraph fg = graph_from_edges(n, e, 0, n - 1);
    paths += P;
    bool same = true;
    for (int K = 1; same && K <= P + 1; ++K) {
      const auto yen = k_shortest(fg, K);
      same = int(yen.size()) == std::min(K, P);
      for (int k = 0; same && k < int(yen.size()); ++k)
        same = yen[k].nodes == all[k].second && std::abs(yen[k].discrete_cost - all[k].first) <= 1e-12;
      ++runs;
    }
    o.check(same, "graph " + std::to_string(graphs) + " (" + std::to_string(n) + " nodes, " + std::to_string(P) +
                      " paths)");
  }
  const double secs = seconds_since(t0);
  o.check(secs < 30.0, "runtime " + fmt("%.1fs", secs));
  o.note(std::to_string(graphs) + " graphs, " + std::to_string(paths) + " paths, " + std::to_string(runs) +
         " searches in " + fmt("%.2fs", secs));
  return o;
}

Outcome global_pipeline() {
  Outcome o;
  const Scenario sc = scenario("midpoint_vortex");
  const ScenarioDomain dom = scenario_domain(sc);
  const GlobalOptions opts = options_of(sc, sc.N);
  const GlobalResult a = global_optimize(sc.wind, sc.vbar, sc.x_O, sc.x_D, dom.omega, opts);
  const GlobalResult b = global_optimize(sc.wind, sc.vbar, sc.x_O, sc.x_D, dom.omega, opts);
  const int distinct = a.distinct_optima(1e-6);
  o.check(opts.K == 8, "K is not 8");
  o.check(distinct >= 2, std::to_string(distinct) + " distinct optima");
  const double T_line = travel_time(straight_line(sc.x_O, sc.x_D, sc.N), sc.wind, sc.vbar, sc.solver.quadrature);
  const CandidatePath* best = a.best();
  o.check(best != nullptr, "no converged candidate");
  if (best) {
    o.check(best->refined_T < T_line - 1e-3 * sc.L_tilde() / sc.vbar, "best T " + fmt("%.6f", best->refined_T));
    o.note("best T " + fmt("%.5f", best->refined_T) + " vs straight " + fmt("%.5f", T_line));
  }
  o.check(candidates_csv(a) == candidates_csv(b), "rerun differs");
  o.note(std::to_string(distinct) + " distinct optima");
  return o;
}

Outcome wirtinger() {
  Outcome o;
  std::mt19937_64 g(99);
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> U(0, 1);
  double worst = 0;
  for (int s = 0; s < 10000; ++s) {
    const int N = 2 + int(U(g) * 63);
    Direction d(N);
    d.dL = n(g);
    switch (s % 3) {
      case 0:  // white noise on the nodes
        for (auto& p : d.dnodes) p = Vec2(n(g), n(g));
        break;
      case 1: {  // a few low modes, close to the extremal one
        const int modes = 1 + int(U(g) * 3);
        std::vector<Vec2> a(modes);
        for (auto& c : a) c = Vec2(n(g), n(g)) * std::exp(-2.0 * U(g));
        for (int i = 1; i < N; ++i)
          for (int k = 0; k < modes; ++k) d.dnodes[i - 1] += a[k] * std::sin((k + 1) * std::numbers::pi * i / N);
        break;
      }
      default: {  // a single hat
        d.dnodes[int(U(g) * (N - 1))] = Vec2(n(g), n(g));
        break;
      }
    }
    const NormParts p = norm_parts(d);
    if (p.vel_l2 == 0) continue;
    const double ratio = p.pos_l2 * p.pos_l2 / (p.vel_l2 * p.vel_l2);
    worst = std::max(worst, ratio);
    if (!(ratio <= 1.0 / std::numbers::pi)) o.check(false, "sample " + std::to_string(s) + " ratio " + fmt("%.4f", ratio));
  }
  o.note("max ratio " + fmt("%.5f", worst) + " (1/pi = " + fmt("%.5f", 1 / std::numbers::pi) + ", 1/pi^2 = " +
         fmt("%.5f", 1 / (std::numbers::pi * std::numbers::pi)) + ")");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"analytic optima", analytic_optima},
      {"derivative consistency", derivative_consistency},
      {"bound verification", bound_verification},
      {"KKT optimality structure", kkt_structure},
      {"contraction", contraction},
      {"constructive witnesses", witnesses},
      {"Yen correctness", yen_correctness},
      {"global pipeline", global_pipeline},
      {"Wirtinger property", wirtinger},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
