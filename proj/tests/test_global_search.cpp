#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <random>

#include "zermelo/global_search.hpp"
#include "zermelo/scenario.hpp"

using namespace zermelo;

namespace {

const WindField kCalm = WindField::constant(Vec2::Zero());

using EdgeList = std::vector<std::tuple<int, int, double>>;

struct Listed {
  std::vector<int> nodes;
  double cost;
};

// every simple path by DFS, sorted by (cost, nodes)
std::vector<Listed> enumerate_paths(int n, const EdgeList& edges, int o, int d) {
  std::vector<std::vector<std::pair<int, double>>> adj(n);
  for (const auto& [a, b, c] : edges) adj[a].push_back({b, c});
  std::vector<Listed> out;
  std::vector<int> path{o};
  std::vector<char> on(n, 0);
  on[o] = 1;
  std::function<void()> dfs = [&]() {
    const int u = path.back();
    if (u == d) {
      double c = 0;
      for (std::size_t i = 0; i + 1 < path.size(); ++i)
        for (const auto& [v, w] : adj[path[i]])
          if (v == path[i + 1]) c += w;
      out.push_back({path, c});
      return;
    }
    for (const auto& [v, w] : adj[u]) {
      if (on[v]) continue;
      on[v] = 1;
      path.push_back(v);
      dfs();
      path.pop_back();
      on[v] = 0;
    }
  };
  dfs();
  std::sort(out.begin(), out.end(),
            [](const Listed& a, const Listed& b) { return a.cost != b.cost ? a.cost < b.cost : a.nodes < b.nodes; });
  return out;
}

double dijkstra(int n, const EdgeList& edges, int o, int d) {
  std::vector<std::vector<std::pair<int, double>>> adj(n);
  for (const auto& [a, b, c] : edges) adj[a].push_back({b, c});
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[o] = 0;
  pq.push({0, o});
  while (!pq.empty()) {
    const auto [du, u] = pq.top();
    pq.pop();
    if (du > dist[u]) continue;
    for (const auto& [v, w] : adj[u])
      if (du + w < dist[v]) pq.push({dist[v] = du + w, v});
  }
  return dist[d];
}

// random digraph without duplicate edges; integer costs force ties
EdgeList random_edges(std::mt19937_64& g, int n, double p, bool integer_costs) {
  std::uniform_real_distribution<double> U(0, 1);
  EdgeList e;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (a != b && U(g) < p) e.emplace_back(a, b, integer_costs ? 1.0 + std::floor(4 * U(g)) : 0.1 + U(g));
  return e;
}

Ellipse open_domain() { return ellipse_domain(Vec2(0, 0), Vec2(1, 0), 1.0, 0.3); }

Scenario midpoint_vortex() {
  Scenario sc;
  sc.wind = WindField::gaussian_vortex(Vec2(0.5, 0.0), 6.0, 0.15);
  sc.solver.damping = Damping::ArmijoHalving;
  sc.h = 0.5;
  sc.K = 8;
  return sc;
}

GlobalOptions options_of(const Scenario& sc) {
  GlobalOptions o;
  o.h = sc.h;
  o.K = sc.K;
  o.N = sc.N;
  o.solver = sc.solver;
  return o;
}

}  // namespace

TEST(BuildGraph, ZeroWindCoarseGrid) {
  const FlightGraph g = build_graph(kCalm, 1.0, Vec2(0, 0), Vec2(1, 0), open_domain(), 0.5, 0.75);
  EXPECT_EQ(g.nodes[g.origin], Vec2(0, 0));
  EXPECT_EQ(g.nodes[g.dest], Vec2(1, 0));
  const auto best = k_shortest(g, 1);
  ASSERT_EQ(best.size(), 1u);
  EXPECT_NEAR(best[0].discrete_cost, 1.0, 1e-14);
  for (int v : best[0].nodes) EXPECT_EQ(g.nodes[v].y(), 0.0);
}

TEST(BuildGraph, NodesInsideDomainAndEdgesWithinReach) {
  const Ellipse dom = open_domain();
  const FlightGraph g = build_graph(kCalm, 1.0, Vec2(0, 0), Vec2(1, 0), dom, 0.1, 0.25);
  for (const Vec2& p : g.nodes) EXPECT_TRUE(dom.contains(p, 1e-9));
  for (int a = 0; a < g.node_count(); ++a) {
    for (const auto& e : g.out[a]) {
      EXPECT_LE((g.nodes[a] - g.nodes[e.to]).norm(), 0.25 + 1e-12);
      EXPECT_GT(e.cost, 0);
    }
    EXPECT_TRUE(std::is_sorted(g.out[a].begin(), g.out[a].end(),
                               [](const GraphEdge& x, const GraphEdge& y) { return x.to < y.to; }));
  }
}

TEST(BuildGraph, HalvingSpacingQuadruplesNodes) {
  const Ellipse dom = open_domain();
  const int n1 = build_graph(kCalm, 1.0, Vec2(0, 0), Vec2(1, 0), dom, 0.05, 0.125).node_count();
  const int n2 = build_graph(kCalm, 1.0, Vec2(0, 0), Vec2(1, 0), dom, 0.025, 0.0625).node_count();
  const double r = double(n2) / n1;
  EXPECT_GE(r, 3.5);
  EXPECT_LE(r, 4.5);
}

TEST(BuildGraph, EdgeCostIsOneIntervalTravelTime) {
  const WindField w = WindField::gaussian_vortex(Vec2(0.5, 0.1), 0.5, 0.3);
  const FlightGraph g = build_graph(w, 1.0, Vec2(0, 0), Vec2(1, 0), open_domain(), 0.1, 0.25);
  int checked = 0;
  for (int a = 0; a < g.node_count(); a += 7) {
    for (const auto& e : g.out[a]) {
      const State seg = straight_line(g.nodes[a], g.nodes[e.to], 1);
      EXPECT_NEAR(e.cost, travel_time(seg, w, 1.0), 1e-12);
      EXPECT_EQ(g.edge_cost(a, e.to), e.cost);
      ++checked;
    }
  }
  EXPECT_GT(checked, 100);
  EXPECT_EQ(g.edge_cost(g.origin, g.origin), std::numeric_limits<double>::infinity());
}

TEST(BuildGraph, ReversedAdjacencyMatches) {
  const FlightGraph g = build_graph(kCalm, 1.0, Vec2(0, 0), Vec2(1, 0), open_domain(), 0.2, 0.5);
  long back = 0;
  for (int b = 0; b < g.node_count(); ++b)
    for (const auto& e : g.in[b]) {
      EXPECT_EQ(g.edge_cost(e.to, b), e.cost);
      ++back;
    }
  EXPECT_EQ(back, g.edge_count());
}

TEST(BuildGraph, WindAboveAirspeedThrows) {
  EXPECT_THROW(build_graph(WindField::constant(Vec2(1.5, 0)), 1.0, Vec2(0, 0), Vec2(1, 0), open_domain(), 0.2, 0.5),
               Error);
}

TEST(KShortest, Triangle) {
  const FlightGraph g = graph_from_edges(3, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 3.0}}, 0, 2);
  const auto p = k_shortest(g, 5);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p[0].nodes, (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(p[0].discrete_cost, 2.0);
  EXPECT_EQ(p[1].nodes, (std::vector<int>{0, 2}));
  EXPECT_EQ(p[1].discrete_cost, 3.0);
}

TEST(KShortest, FewerPathsThanRequested) {
  const EdgeList e{{0, 1, 1}, {1, 4, 1}, {0, 2, 1}, {2, 3, 1}, {3, 4, 1}, {1, 2, 5}};
  const FlightGraph g = graph_from_edges(5, e, 0, 4);
  const auto p = k_shortest(g, 100);
  EXPECT_EQ(p.size(), enumerate_paths(5, e, 0, 4).size());
  EXPECT_EQ(p.size(), 3u);
}

TEST(KShortest, DisconnectedThrows) {
  const FlightGraph g = graph_from_edges(4, {{0, 1, 1.0}, {2, 3, 1.0}}, 0, 3);
  try {
    k_shortest(g, 3);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Disconnected);
  }
}

TEST(KShortest, FirstPathIsDijkstra) {
  std::mt19937_64 g(21);
  for (int t = 0; t < 50; ++t) {
    const int n = 6 + t % 10;
    const EdgeList e = random_edges(g, n, 0.35, false);
    const double best = dijkstra(n, e, 0, n - 1);
    if (!std::isfinite(best)) continue;
    const auto p = k_shortest(graph_from_edges(n, e, 0, n - 1), 1);
    ASSERT_EQ(p.size(), 1u);
    EXPECT_NEAR(p[0].discrete_cost, best, 1e-12);
  }
}

TEST(KShortest, MatchesExhaustiveEnumerationOnRandomGraphs) {
  std::mt19937_64 g(22);
  int compared = 0;
  for (int t = 0; t < 100; ++t) {
    const int n = 5 + t % 4;
    const bool ints = t % 2 == 1;
    const EdgeList e = random_edges(g, n, 0.45, ints);
    const auto all = enumerate_paths(n, e, 0, n - 1);
    if (all.empty()) continue;
    const int K = 1 + t % 12;
    const FlightGraph fg = graph_from_edges(n, e, 0, n - 1);
    const auto yen = k_shortest(fg, K);
    const auto brute = brute_force_k_shortest(fg, K);
    const std::size_t expect = std::min<std::size_t>(K, all.size());
    ASSERT_EQ(yen.size(), expect) << "graph " << t;
    ASSERT_EQ(brute.size(), expect) << "graph " << t;
    for (std::size_t k = 0; k < expect; ++k) {
      EXPECT_NEAR(yen[k].discrete_cost, all[k].cost, 1e-12) << "graph " << t << " rank " << k;
      EXPECT_EQ(yen[k].nodes, all[k].nodes) << "graph " << t << " rank " << k;
      EXPECT_EQ(brute[k].nodes, all[k].nodes) << "graph " << t << " rank " << k;
    }
    ++compared;
  }
  EXPECT_GE(compared, 80);
}

TEST(PathCost, SumsEdges) {
  const FlightGraph g = graph_from_edges(3, {{0, 1, 0.25}, {1, 2, 0.5}}, 0, 2);
  EXPECT_EQ(path_cost(g, {0, 1, 2}), 0.75);
}

TEST(GraphFromEdges, RejectsNonPositiveCosts) {
  EXPECT_THROW(graph_from_edges(2, {{0, 1, 0.0}}, 0, 1), Error);
}

TEST(Refine, ZeroWindGivesStraightLine) {
  const FlightGraph g = build_graph(kCalm, 1.0, Vec2(0, 0), Vec2(1, 0), open_domain(), 0.25, 0.6);
  const auto cands = k_shortest(g, 3);
  for (const auto& c : cands) {
    const CandidatePath r = refine(c, g, kCalm, 1.0, 8, SolveOptions{});
    EXPECT_TRUE(r.attempted);
    ASSERT_TRUE(r.refined) << r.message;
    EXPECT_NEAR(r.refined_T, 1.0, 1e-10);
    EXPECT_LE(r.refined_T, c.discrete_cost + 1e-12);
  }
}

TEST(Refine, VortexImprovesOnDiscreteCost) {
  const WindField w = WindField::gaussian_vortex(Vec2(0.5, 0.1), 0.5, 0.3);
  const FlightGraph g = build_graph(w, 1.0, Vec2(0, 0), Vec2(1, 0), open_domain(), 0.1, 0.25);
  SolveOptions o;
  o.damping = Damping::ArmijoHalving;
  const CandidatePath r = refine(k_shortest(g, 1)[0], g, w, 1.0, 16, o);
  ASSERT_TRUE(r.refined) << r.message;
  EXPECT_EQ(r.status, SolveStatus::Converged);
  EXPECT_LE(r.refined_T, r.discrete_cost + 1e-6);
  EXPECT_EQ(r.solution.z.N(), 16);
}

TEST(Refine, FailureIsRecorded) {
  const WindField w = WindField::gaussian_vortex(Vec2(0.5, 0.1), 0.5, 0.3);
  const FlightGraph g = build_graph(w, 1.0, Vec2(0, 0), Vec2(1, 0), open_domain(), 0.1, 0.25);
  SolveOptions o;
  o.max_iter = 1;
  const CandidatePath r = refine(k_shortest(g, 1)[0], g, w, 1.0, 16, o);
  EXPECT_TRUE(r.attempted);
  EXPECT_FALSE(r.refined);
  EXPECT_EQ(r.status, SolveStatus::MaxIter);
}

TEST(GlobalOptimize, ZeroWind) {
  GlobalOptions o;
  o.h = 0.25;
  o.K = 4;
  o.N = 8;
  const GlobalResult res = global_optimize(kCalm, 1.0, Vec2(0, 0), Vec2(1, 0), open_domain(), o);
  ASSERT_NE(res.best(), nullptr);
  EXPECT_NEAR(res.best()->refined_T, 1.0, 1e-10);
  EXPECT_EQ(res.distinct_optima(1e-6), 1);
  EXPECT_EQ(res.stats.nodes, res.graph.node_count());
}

TEST(GlobalOptimize, MidpointVortexHasTwoLocalOptima) {
  const Scenario sc = midpoint_vortex();
  const ScenarioDomain dom = scenario_domain(sc);
  const GlobalResult res = global_optimize(sc.wind, 1.0, sc.x_O, sc.x_D, dom.omega, options_of(sc));
  EXPECT_GE(res.distinct_optima(1e-6), 2);
  ASSERT_NE(res.best(), nullptr);
  // the better side beats flying straight through
  EXPECT_LT(res.best()->refined_T, travel_time(straight_line(sc.x_O, sc.x_D, sc.N), sc.wind, 1.0));
  // ranking: converged candidates first, sorted by refined T
  bool seen_unrefined = false;
  double prev = -1;
  for (const auto& c : res.ranked) {
    if (!c.refined) {
      seen_unrefined = true;
      continue;
    }
    EXPECT_FALSE(seen_unrefined);
    EXPECT_GE(c.refined_T, prev);
    prev = c.refined_T;
  }

  GlobalOptions one = options_of(sc);
  one.K = 1;
  EXPECT_EQ(global_optimize(sc.wind, 1.0, sc.x_O, sc.x_D, dom.omega, one).distinct_optima(1e-6), 1);
}

TEST(GlobalOptimize, DeterministicAcrossRunsAndWorkers) {
  const Scenario sc = midpoint_vortex();
  const ScenarioDomain dom = scenario_domain(sc);
  GlobalOptions a = options_of(sc), b = options_of(sc);
  a.workers = 1;
  b.workers = 4;
  const std::string ca = candidates_csv(global_optimize(sc.wind, 1.0, sc.x_O, sc.x_D, dom.omega, a));
  const std::string cb = candidates_csv(global_optimize(sc.wind, 1.0, sc.x_O, sc.x_D, dom.omega, b));
  EXPECT_EQ(ca, cb);
  EXPECT_EQ(ca.substr(0, ca.find('\n')), "rank,discrete_cost,refined_T,iterations,status");
}

TEST(BuildGraph, ReachMustCoverDiagonal) {
  EXPECT_THROW(build_graph(kCalm, 1.0, Vec2(0, 0), Vec2(1, 0), open_domain(), 0.1, 0.12), Error);
}
