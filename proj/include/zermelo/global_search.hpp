#pragma once

#include <string>
#include <tuple>
#include <vector>

#include "zermelo/kkt_solver.hpp"
#include "zermelo/trajectory.hpp"
#include "zermelo/windfield.hpp"

namespace zermelo {

struct GraphEdge {
  int to = 0;
  double cost = 0;
};

// Directed graph; adjacency lists are sorted by target index. Immutable once
// built.
struct FlightGraph {
  std::vector<Vec2> nodes;
  std::vector<std::vector<GraphEdge>> out;
  std::vector<std::vector<GraphEdge>> in;  // reversed edges, `to` is the source
  int origin = 0;
  int dest = 0;
  double h = 0, ell = 0;

  int node_count() const { return int(out.size()); }
  long edge_count() const;
  // +inf when there is no edge
  double edge_cost(int from, int to) const;
};

struct GraphStats {
  int nodes = 0;
  long edges = 0;
  double h = 0, ell = 0;
  double min_cost = 0, max_cost = 0;
  double build_seconds = 0;
};

// Uniform grid anchored at x_O, clipped to the domain, plus x_D. Edges join
// nodes at distance at most ell; the cost is the travel time of the straight
// segment with Q_e midpoint samples. Throws Disconnected or
// WindExceedsAirspeed.
FlightGraph build_graph(const WindField& field, double vbar, const Vec2& x_O, const Vec2& x_D, const Ellipse& domain,
                        double h, double ell, int Q_e = 4, int workers = 0);

// Explicit graph for tests; costs must be positive.
FlightGraph graph_from_edges(int n, const std::vector<std::tuple<int, int, double>>& edges, int origin, int dest);

GraphStats graph_stats(const FlightGraph& g);

// sum of edge costs, accumulated front to back
double path_cost(const FlightGraph& g, const std::vector<int>& path);

struct CandidatePath {
  std::vector<int> nodes;
  double discrete_cost = 0;

  bool refined = false;  // refinement attempted and converged
  bool attempted = false;
  double refined_T = 0;
  int iterations = 0;
  SolveStatus status = SolveStatus::MaxIter;
  std::string message;
  KKTIterate solution;  // converged iterate when refined
};

// Yen's algorithm. Equal costs are broken by lexicographic node order, so the
// output is the first K paths in (cost, nodes) order. Throws Disconnected.
std::vector<CandidatePath> k_shortest(const FlightGraph& g, int K);
// exhaustive enumeration of all simple origin-destination paths, same order
std::vector<CandidatePath> brute_force_k_shortest(const FlightGraph& g, int K);

// Resample the polyline to N constant-speed intervals, start from λ = 0 and
// run the Newton-KKT solver. Failures are recorded on the candidate.
CandidatePath refine(const CandidatePath& cand, const FlightGraph& g, const WindField& field, double vbar, int N,
                     const SolveOptions& opts);

struct GlobalOptions {
  double h = 0.1;
  double ell = 0.0;  // <= 0 means 2.5 h
  int K = 8;
  int N = 16;
  int Q_e = 4;
  int workers = 0;
  SolveOptions solver;
};

struct GlobalResult {
  FlightGraph graph;
  GraphStats stats;
  std::vector<CandidatePath> ranked;  // converged by refined T, then the rest by discrete cost
  double seconds = 0;

  const CandidatePath* best() const;
  // number of refined values separated by more than tol
  int distinct_optima(double tol) const;
};

GlobalResult global_optimize(const WindField& field, double vbar, const Vec2& x_O, const Vec2& x_D,
                             const Ellipse& domain, const GlobalOptions& opts);

// rank,discrete_cost,refined_T,iterations,status
std::string candidates_csv(const GlobalResult& res);

}  // namespace zermelo
