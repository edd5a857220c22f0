#include "zermelo/global_search.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <thread>

#include "zermelo/functional.hpp"

namespace zermelo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// runs fn(i) for i in [0, n) on a few threads; rethrows the first failure
void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  workers = workers > 0 ? workers : int(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, std::max(1, n));
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(n);
  const auto work = [&]() {
    for (int i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

void fill_reverse(FlightGraph& g) {
  g.in.assign(g.out.size(), {});
  for (int u = 0; u < g.node_count(); ++u)
    for (const auto& e : g.out[u]) g.in[e.to].push_back({u, e.cost});
  // sources were visited in increasing order, so `in` is already sorted
}

// Distances to `target` over the graph without the masked nodes and without
// the edges spur -> banned.
std::vector<double> distances_to(const FlightGraph& g, int target, const std::vector<char>& removed, int spur,
                                 const std::set<int>& banned) {
  std::vector<double> d(g.node_count(), kInf);
  if (removed[target]) return d;
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  d[target] = 0.0;
  pq.push({0.0, target});
  while (!pq.empty()) {
    const auto [du, v] = pq.top();
    pq.pop();
    if (du > d[v]) continue;
    for (const auto& e : g.in[v]) {
      const int u = e.to;
      if (removed[u]) continue;
      if (u == spur && banned.count(v)) continue;
      const double nd = e.cost + du;
      if (nd < d[u]) {
        d[u] = nd;
        pq.push({nd, u});
      }
    }
  }
  return d;
}

// Lexicographically smallest among the cheapest paths from `from` to `target`
// in the masked graph; empty if unreachable.
std::vector<int> cheapest_path(const FlightGraph& g, int from, int target, const std::vector<char>& removed,
                               const std::set<int>& banned) {
  const std::vector<double> d = distances_to(g, target, removed, from, banned);
  if (!std::isfinite(d[from])) return {};
  std::vector<int> path{from};
  int u = from;
  while (u != target) {
    int next = -1;
    for (const auto& e : g.out[u]) {
      if (removed[e.to] || (u == from && banned.count(e.to))) continue;
      if (std::isfinite(d[e.to]) && e.cost + d[e.to] == d[u]) {
        next = e.to;
        break;
      }
    }
    if (next < 0 || int(path.size()) > g.node_count()) return {};
    path.push_back(next);
    u = next;
  }
  return path;
}

CandidatePath make_candidate(const FlightGraph& g, std::vector<int> nodes) {
  CandidatePath c;
  c.discrete_cost = path_cost(g, nodes);
  c.nodes = std::move(nodes);
  return c;
}

}  // namespace

long FlightGraph::edge_count() const {
  long n = 0;
  for (const auto& o : out) n += long(o.size());
  return n;
}

double FlightGraph::edge_cost(int from, int to) const {
  const auto& o = out.at(from);
  auto it = std::lower_bound(o.begin(), o.end(), to, [](const GraphEdge& e, int t) { return e.to < t; });
  return it != o.end() && it->to == to ? it->cost : kInf;
}

double path_cost(const FlightGraph& g, const std::vector<int>& path) {
  double c = 0.0;
  for (std::size_t k = 0; k + 1 < path.size(); ++k) c += g.edge_cost(path[k], path[k + 1]);
  return c;
}

FlightGraph graph_from_edges(int n, const std::vector<std::tuple<int, int, double>>& edges, int origin, int dest) {
  if (n < 1 || origin < 0 || origin >= n || dest < 0 || dest >= n)
    throw Error(ErrorCode::InvalidArgument, "graph_from_edges: bad node index");
  FlightGraph g;
  g.nodes.assign(n, Vec2::Zero());
  g.out.assign(n, {});
  for (const auto& [u, v, c] : edges) {
    if (u < 0 || u >= n || v < 0 || v >= n || u == v)
      throw Error(ErrorCode::InvalidArgument, "graph_from_edges: bad edge");
    if (!(c > 0) || !std::isfinite(c)) throw Error(ErrorCode::InvalidArgument, "graph_from_edges: costs must be positive");
    g.out[u].push_back({v, c});
  }
  for (auto& o : g.out) {
    std::sort(o.begin(), o.end(), [](const GraphEdge& a, const GraphEdge& b) { return a.to < b.to; });
    for (std::size_t k = 1; k < o.size(); ++k)
      if (o[k].to == o[k - 1].to) throw Error(ErrorCode::InvalidArgument, "graph_from_edges: duplicate edge");
  }
  g.origin = origin;
  g.dest = dest;
  fill_reverse(g);
  return g;
}

FlightGraph build_graph(const WindField& field, double vbar, const Vec2& x_O, const Vec2& x_D, const Ellipse& domain,
                        double h, double ell, int Q_e, int workers) {
  if (!(h > 0)) throw Error(ErrorCode::InvalidArgument, "build_graph: h must be positive");
  if (!(ell >= h * std::sqrt(2.0) * (1.0 - 1e-12)))
    throw Error(ErrorCode::InvalidArgument, "build_graph: need ell >= sqrt(2) h");
  FlightGraph g;
  g.h = h;
  g.ell = ell;

  Vec2 lo, hi;
  domain.bounding_box(lo, hi);
  const long i0 = long(std::floor((lo.x() - x_O.x()) / h)) - 1, i1 = long(std::ceil((hi.x() - x_O.x()) / h)) + 1;
  const long j0 = long(std::floor((lo.y() - x_O.y()) / h)) - 1, j1 = long(std::ceil((hi.y() - x_O.y()) / h)) + 1;
  g.origin = -1;
  for (long j = j0; j <= j1; ++j)
    for (long i = i0; i <= i1; ++i) {
      const Vec2 p = x_O + h * Vec2(double(i), double(j));
      if (i == 0 && j == 0) g.origin = int(g.nodes.size());
      if ((i == 0 && j == 0) || domain.contains(p)) g.nodes.push_back(i == 0 && j == 0 ? x_O : p);
    }
  g.dest = -1;
  for (int k = 0; k < int(g.nodes.size()); ++k)
    if ((g.nodes[k] - x_D).norm() <= 1e-12 * h) g.dest = k;
  if (g.dest < 0) {
    g.dest = int(g.nodes.size());
    g.nodes.push_back(x_D);
  } else {
    g.nodes[g.dest] = x_D;
  }

  // cell buckets of width ell
  std::map<std::pair<long, long>, std::vector<int>> cells;
  const auto cell_of = [&](const Vec2& p) {
    return std::make_pair(long(std::floor((p.x() - lo.x()) / ell)), long(std::floor((p.y() - lo.y()) / ell)));
  };
  for (int k = 0; k < int(g.nodes.size()); ++k) cells[cell_of(g.nodes[k])].push_back(k);

  const int n = int(g.nodes.size());
  g.out.assign(n, {});
  const double reach = ell * (1.0 + 1e-12);
  parallel_for(n, workers, [&](int u) {
    const auto [cx, cy] = cell_of(g.nodes[u]);
    std::vector<int> near;
    for (long dy = -1; dy <= 1; ++dy)
      for (long dx = -1; dx <= 1; ++dx) {
        auto it = cells.find({cx + dx, cy + dy});
        if (it != cells.end()) near.insert(near.end(), it->second.begin(), it->second.end());
      }
    std::sort(near.begin(), near.end());
    for (int v : near) {
      const double d = (g.nodes[v] - g.nodes[u]).norm();
      if (!(d > 0) || d > reach) continue;
      State seg;
      seg.path.x_O = g.nodes[u];
      seg.path.x_D = g.nodes[v];
      seg.path.N = 1;
      seg.L = d;
      seg.feasible = true;
      double cost;
      try {
        cost = travel_time(seg, field, vbar, Q_e);
      } catch (const Error& e) {
        throw Error(e.code(), "build_graph: edge " + std::to_string(u) + "->" + std::to_string(v) + ": " + e.what());
      }
      if (!(cost > 0) || !std::isfinite(cost))
        throw Error(ErrorCode::WindExceedsAirspeed, "build_graph: non-positive edge cost");
      g.out[u].push_back({v, cost});
    }
  });
  fill_reverse(g);

  const std::vector<char> none(n, 0);
  if (cheapest_path(g, g.origin, g.dest, none, {}).empty())
    throw Error(ErrorCode::Disconnected, "build_graph: origin and destination are not connected");
  return g;
}

GraphStats graph_stats(const FlightGraph& g) {
  GraphStats s;
  s.nodes = g.node_count();
  s.edges = g.edge_count();
  s.h = g.h;
  s.ell = g.ell;
  s.min_cost = kInf;
  s.max_cost = 0;
  for (const auto& o : g.out)
    for (const auto& e : o) {
      s.min_cost = std::min(s.min_cost, e.cost);
      s.max_cost = std::max(s.max_cost, e.cost);
    }
  if (s.edges == 0) s.min_cost = 0;
  return s;
}

std::vector<CandidatePath> k_shortest(const FlightGraph& g, int K) {
  if (K < 1) throw Error(ErrorCode::InvalidArgument, "k_shortest: K must be >= 1");
  const int n = g.node_count();
  std::vector<char> removed(n, 0);
  std::vector<int> first = cheapest_path(g, g.origin, g.dest, removed, {});
  if (first.empty()) throw Error(ErrorCode::Disconnected, "k_shortest: destination unreachable");

  std::vector<std::vector<int>> accepted{first};
  std::set<std::pair<double, std::vector<int>>> pool;
  std::set<std::vector<int>> seen{first};

  while (int(accepted.size()) < K) {
    const std::vector<int>& prev = accepted.back();
    for (std::size_t i = 0; i + 1 < prev.size(); ++i) {
      const int spur = prev[i];
      // edges leaving the spur node that earlier paths with the same root use
      std::set<int> banned;
      for (const auto& p : accepted)
        if (p.size() > i + 1 && std::equal(prev.begin(), prev.begin() + long(i) + 1, p.begin())) banned.insert(p[i + 1]);
      std::fill(removed.begin(), removed.end(), 0);
      for (std::size_t k = 0; k < i; ++k) removed[prev[k]] = 1;

      std::vector<int> tail = cheapest_path(g, spur, g.dest, removed, banned);
      if (tail.empty()) continue;
      std::vector<int> full(prev.begin(), prev.begin() + long(i));
      full.insert(full.end(), tail.begin(), tail.end());
      if (seen.insert(full).second) pool.insert({path_cost(g, full), full});
    }
    if (pool.empty()) break;
    accepted.push_back(pool.begin()->second);
    pool.erase(pool.begin());
  }

  std::vector<CandidatePath> out;
  for (auto& p : accepted) out.push_back(make_candidate(g, p));
  return out;
}

std::vector<CandidatePath> brute_force_k_shortest(const FlightGraph& g, int K) {
  std::vector<std::pair<double, std::vector<int>>> all;
  std::vector<char> on(g.node_count(), 0);
  std::vector<int> stack{g.origin};
  on[g.origin] = 1;
  std::function<void(int)> dfs = [&](int u) {
    if (u == g.dest) {
      all.push_back({path_cost(g, stack), stack});
      return;
    }
    for (const auto& e : g.out[u]) {
      if (on[e.to]) continue;
      on[e.to] = 1;
      stack.push_back(e.to);
      dfs(e.to);
      stack.pop_back();
      on[e.to] = 0;
    }
  };
  dfs(g.origin);
  std::sort(all.begin(), all.end());
  std::vector<CandidatePath> out;
  for (int k = 0; k < K && k < int(all.size()); ++k) out.push_back(make_candidate(g, all[k].second));
  return out;
}

CandidatePath refine(const CandidatePath& cand, const FlightGraph& g, const WindField& field, double vbar, int N,
                     const SolveOptions& opts) {
  CandidatePath out = cand;
  out.attempted = true;
  out.refined = false;
  try {
    std::vector<Vec2> vertices;
    for (int k : cand.nodes) vertices.push_back(g.nodes.at(k));
    KKTIterate chi0;
    chi0.z = arc_length_resample(vertices, N);
    chi0.lambda = Multiplier(N);
    const SolveReport rep = solve(chi0, field, vbar, opts);
    out.status = rep.status;
    out.iterations = rep.iterations();
    out.message = rep.message;
    if (rep.status == SolveStatus::Converged) {
      out.refined = true;
      out.solution = rep.final;
      out.refined_T = travel_time(rep.final.z, field, vbar, opts.quadrature);
    }
  } catch (const Error& e) {
    out.status = SolveStatus::InvalidIterate;
    out.message = e.what();
  }
  return out;
}

const CandidatePath* GlobalResult::best() const {
  return !ranked.empty() && ranked.front().refined ? &ranked.front() : nullptr;
}

int GlobalResult::distinct_optima(double tol) const {
  std::vector<double> t;
  for (const auto& c : ranked)
    if (c.refined) t.push_back(c.refined_T);
  std::sort(t.begin(), t.end());
  int n = 0;
  for (std::size_t k = 0; k < t.size(); ++k)
    if (k == 0 || t[k] - t[k - 1] > tol) ++n;
  return n;
}

GlobalResult global_optimize(const WindField& field, double vbar, const Vec2& x_O, const Vec2& x_D,
                             const Ellipse& domain, const GlobalOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  GlobalResult res;
  const double ell = opts.ell > 0 ? opts.ell : 2.5 * opts.h;
  res.graph = build_graph(field, vbar, x_O, x_D, domain, opts.h, ell, opts.Q_e, opts.workers);
  const auto t1 = std::chrono::steady_clock::now();
  res.stats = graph_stats(res.graph);
  res.stats.build_seconds = std::chrono::duration<double>(t1 - t0).count();

  std::vector<CandidatePath> cands = k_shortest(res.graph, opts.K);
  parallel_for(int(cands.size()), opts.workers,
               [&](int k) { cands[k] = refine(cands[k], res.graph, field, vbar, opts.N, opts.solver); });
  // stable: ties keep the Yen order
  std::stable_sort(cands.begin(), cands.end(), [](const CandidatePath& a, const CandidatePath& b) {
    if (a.refined != b.refined) return a.refined;
    return a.refined ? a.refined_T < b.refined_T : a.discrete_cost < b.discrete_cost;
  });
  res.ranked = std::move(cands);
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

std::string candidates_csv(const GlobalResult& res) {
  std::ostringstream os;
  os << "rank,discrete_cost,refined_T,iterations,status\n";
  char buf[256];
  for (std::size_t k = 0; k < res.ranked.size(); ++k) {
    const auto& c = res.ranked[k];
    const char* status = c.attempted ? to_string(c.status) : "unrefined";
    if (c.refined)
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%d,%s\n", k + 1, c.discrete_cost, c.refined_T, c.iterations,
                    status);
    else
      std::snprintf(buf, sizeof buf, "%zu,%.17g,,%d,%s\n", k + 1, c.discrete_cost, c.iterations, status);
    os << buf;
  }
  return os.str();
}

}  // namespace zermelo
