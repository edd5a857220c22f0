#pragma once

#include <string>
#include <vector>

#include "zermelo/common.hpp"

namespace zermelo {

// Piecewise-linear path on the uniform grid tau_i = i/N with fixed endpoints.
struct Path {
  Vec2 x_O = Vec2::Zero();
  Vec2 x_D = Vec2::Zero();
  std::vector<Vec2> interior;  // N-1 nodes
  int N = 1;

  // node 0..N (0 and N are the endpoints)
  Vec2 node(int i) const {
    if (i == 0) return x_O;
    if (i == N) return x_D;
    return interior[i - 1];
  }
  // constant velocity on interval i
  Vec2 velocity(int i) const { return double(N) * (node(i + 1) - node(i)); }
  double polyline_length() const;
};

struct State {
  double L = 1.0;
  Path path;
  bool feasible = false;

  int N() const { return path.N; }
  // relative constant-speed residual max_i |‖ξ_τ,i‖² − L²| / L²
  double feasibility_residual() const;
};

// Perturbation δz = (δL, δξ) with δξ vanishing at both endpoints.
struct Direction {
  double dL = 0.0;
  std::vector<Vec2> dnodes;  // N-1 interior displacements

  Direction() = default;
  explicit Direction(int N) : dnodes(std::size_t(N > 0 ? N - 1 : 0), Vec2::Zero()) {}

  int N() const { return int(dnodes.size()) + 1; }
  Vec2 node(int i) const {
    if (i == 0 || i == N()) return Vec2::Zero();
    return dnodes[i - 1];
  }
  Vec2 velocity(int i) const { return double(N()) * (node(i + 1) - node(i)); }

  // coefficient layout: [dL, x_1, y_1, x_2, y_2, ...]
  Vec coefficients() const;
  static Direction from_coefficients(const Vec& c);
  static int size_for(int N) { return 2 * (N - 1) + 1; }
};

struct Ellipse {
  Vec2 focus_a = Vec2::Zero();
  Vec2 focus_b = Vec2::Zero();
  double major_sum = 0.0;

  Vec2 center() const { return 0.5 * (focus_a + focus_b); }
  double semi_major() const { return 0.5 * major_sum; }
  double semi_minor() const;
  // unit vector along the focal axis ((1,0) if the foci coincide)
  Vec2 axis() const;
  bool contains(const Vec2& x, double rel_tol = 1e-12) const;
  // axis-aligned bounding box
  void bounding_box(Vec2& lo, Vec2& hi) const;
};

enum class NormKind { Zinf, Z2, Yinf, Y2 };

// The pieces every norm is assembled from.
struct NormParts {
  double L = 0;        // |L| or |δL|
  double pos_sup = 0;  // max ‖ξ‖
  double vel_sup = 0;  // max_i ‖ξ_τ,i‖
  double pos_l2 = 0;   // ‖ξ‖_{L²}, exact for piecewise-linear
  double vel_l2 = 0;   // ‖ξ_τ‖_{L²}
};

NormParts norm_parts(const State& z);
NormParts norm_parts(const Direction& d);
// Z norms only; Y norms need a multiplier (see functional.hpp)
double norm(const State& z, NormKind which);
double norm(const Direction& d, NormKind which);
double combine(const NormParts& p, NormKind which);

State straight_line(const Vec2& x_O, const Vec2& x_D, int N);
// Arc-length equidistribution of a polyline given by its vertices.
State arc_length_resample(const std::vector<Vec2>& vertices, int N);
State reparametrize_constant_speed(const Path& path);
// linear interpolation onto M uniform intervals, then reparametrization
State resample(const State& z, int M);
Ellipse ellipse_domain(const Vec2& x_O, const Vec2& x_D, double vbar, double c0);

// z + s * d (endpoints untouched)
State displaced(const State& z, const Direction& d, double s = 1.0);
// a - b as a direction; grids must match
Direction difference(const State& a, const State& b);

std::string to_csv(const State& z);

}  // namespace zermelo
