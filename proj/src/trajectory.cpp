#include "zermelo/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace zermelo {

double Path::polyline_length() const {
  double s = 0.0;
  for (int i = 0; i < N; ++i) s += (node(i + 1) - node(i)).norm();
  return s;
}

double State::feasibility_residual() const {
  const double L2 = L * L;
  double worst = 0.0;
  for (int i = 0; i < path.N; ++i)
    worst = std::max(worst, std::abs(path.velocity(i).squaredNorm() - L2));
  return L2 > 0 ? worst / L2 : worst;
}

Vec Direction::coefficients() const {
  Vec c(size_for(N()));
  c(0) = dL;
  for (std::size_t k = 0; k < dnodes.size(); ++k) {
    c(1 + 2 * k) = dnodes[k].x();
    c(2 + 2 * k) = dnodes[k].y();
  }
  return c;
}

Direction Direction::from_coefficients(const Vec& c) {
  if (c.size() < 1 || c.size() % 2 == 0)
    throw Error(ErrorCode::ShapeMismatch, "direction coefficient vector must have odd length");
  Direction d(int((c.size() - 1) / 2) + 1);
  d.dL = c(0);
  for (std::size_t k = 0; k < d.dnodes.size(); ++k) d.dnodes[k] = {c(1 + 2 * k), c(2 + 2 * k)};
  return d;
}

double Ellipse::semi_minor() const {
  const double a = semi_major();
  const double d = 0.5 * (focus_b - focus_a).norm();
  return std::sqrt(std::max(0.0, a * a - d * d));
}

Vec2 Ellipse::axis() const {
  Vec2 d = focus_b - focus_a;
  const double n = d.norm();
  return n > 0 ? Vec2(d / n) : Vec2(1.0, 0.0);
}

bool Ellipse::contains(const Vec2& x, double rel_tol) const {
  const double s = (x - focus_a).norm() + (x - focus_b).norm();
  return s <= major_sum * (1.0 + rel_tol);
}

void Ellipse::bounding_box(Vec2& lo, Vec2& hi) const {
  const Vec2 u = axis();
  const double a = semi_major(), b = semi_minor();
  const double ex = std::sqrt(a * a * u.x() * u.x() + b * b * u.y() * u.y());
  const double ey = std::sqrt(a * a * u.y() * u.y() + b * b * u.x() * u.x());
  lo = center() - Vec2(ex, ey);
  hi = center() + Vec2(ex, ey);
}

namespace {

// ∫ over one interval of ‖(1-s)a + s b‖², scaled by the interval width
double hat_l2_sq(const Vec2& a, const Vec2& b, double width) {
  return width * (a.squaredNorm() + a.dot(b) + b.squaredNorm()) / 3.0;
}

template <class NodeFn>
NormParts parts_from_nodes(double L, int N, NodeFn node) {
  NormParts p;
  p.L = std::abs(L);
  const double h = 1.0 / N;
  double pos = 0.0, vel = 0.0;
  for (int i = 0; i <= N; ++i) p.pos_sup = std::max(p.pos_sup, node(i).norm());
  for (int i = 0; i < N; ++i) {
    const Vec2 a = node(i), b = node(i + 1);
    const Vec2 v = double(N) * (b - a);
    p.vel_sup = std::max(p.vel_sup, v.norm());
    pos += hat_l2_sq(a, b, h);
    vel += h * v.squaredNorm();
  }
  p.pos_l2 = std::sqrt(pos);
  p.vel_l2 = std::sqrt(vel);
  return p;
}

}  // namespace

NormParts norm_parts(const State& z) {
  return parts_from_nodes(z.L, z.path.N, [&](int i) { return z.path.node(i); });
}

NormParts norm_parts(const Direction& d) {
  return parts_from_nodes(d.dL, d.N(), [&](int i) { return d.node(i); });
}

double combine(const NormParts& p, NormKind which) {
  switch (which) {
    case NormKind::Zinf:
    case NormKind::Yinf:
      return p.L + p.pos_sup + p.vel_sup;
    case NormKind::Z2:
    case NormKind::Y2:
      return p.L + p.pos_l2 + p.vel_l2;
  }
  return 0.0;
}

double norm(const State& z, NormKind which) { return combine(norm_parts(z), which); }
double norm(const Direction& d, NormKind which) { return combine(norm_parts(d), which); }

State straight_line(const Vec2& x_O, const Vec2& x_D, int N) {
  if (N < 1) throw Error(ErrorCode::InvalidArgument, "straight_line: N must be >= 1");
  if (x_O == x_D) throw Error(ErrorCode::CoincidentEndpoints, "straight_line: coincident endpoints");
  State z;
  z.path.x_O = x_O;
  z.path.x_D = x_D;
  z.path.N = N;
  z.path.interior.reserve(N - 1);
  for (int i = 1; i < N; ++i) {
    const double t = double(i) / N;
    z.path.interior.push_back((1.0 - t) * x_O + t * x_D);
  }
  z.L = (x_D - x_O).norm();
  z.feasible = true;
  return z;
}

State arc_length_resample(const std::vector<Vec2>& vertices, int N) {
  if (N < 1) throw Error(ErrorCode::InvalidArgument, "resample: N must be >= 1");
  if (vertices.size() < 2) throw Error(ErrorCode::InvalidArgument, "resample: need >= 2 vertices");
  std::vector<double> cum(vertices.size(), 0.0);
  for (std::size_t k = 1; k < vertices.size(); ++k) {
    const double len = (vertices[k] - vertices[k - 1]).norm();
    if (!(len > 0.0))
      throw Error(ErrorCode::ZeroLengthInterval, "reparametrize: zero-length interval " + std::to_string(k - 1));
    cum[k] = cum[k - 1] + len;
  }
  const double total = cum.back();

  State z;
  z.path.x_O = vertices.front();
  z.path.x_D = vertices.back();
  z.path.N = N;
  z.path.interior.reserve(N - 1);
  std::size_t seg = 1;
  for (int i = 1; i < N; ++i) {
    const double target = total * double(i) / N;
    while (seg + 1 < cum.size() && cum[seg] < target) ++seg;
    const double len = cum[seg] - cum[seg - 1];
    const double s = std::clamp((target - cum[seg - 1]) / len, 0.0, 1.0);
    z.path.interior.push_back((1.0 - s) * vertices[seg - 1] + s * vertices[seg]);
  }
  z.L = total;
  // Intervals that straddle a polyline corner have a shorter chord, so the
  // constant-speed condition is exact only when corners land on grid nodes.
  z.feasible = z.feasibility_residual() <= 1e-10;
  return z;
}

State reparametrize_constant_speed(const Path& path) {
  std::vector<Vec2> v;
  v.reserve(path.N + 1);
  for (int i = 0; i <= path.N; ++i) v.push_back(path.node(i));
  return arc_length_resample(v, path.N);
}

State resample(const State& z, int M) {
  if (M < 1) throw Error(ErrorCode::InvalidArgument, "resample: M must be >= 1");
  const int N = z.path.N;
  std::vector<Vec2> pts;
  pts.reserve(M + 1);
  for (int j = 0; j <= M; ++j) {
    if (j == 0) { pts.push_back(z.path.x_O); continue; }
    if (j == M) { pts.push_back(z.path.x_D); continue; }
    // locate tau = j/M on the source grid using integer arithmetic
    const long num = long(j) * N;
    const int i = int(num / M);
    const double s = double(num - long(i) * M) / M;
    pts.push_back((1.0 - s) * z.path.node(i) + s * z.path.node(std::min(i + 1, N)));
  }
  return arc_length_resample(pts, M);
}

Ellipse ellipse_domain(const Vec2& x_O, const Vec2& x_D, double vbar, double c0) {
  if (!(c0 < vbar))
    throw Error(ErrorCode::WindExceedsAirspeed, "ellipse_domain: wind bound c0 must be below the airspeed");
  Ellipse e;
  e.focus_a = x_O;
  e.focus_b = x_D;
  e.major_sum = (x_D - x_O).norm() * (vbar + c0) / (vbar - c0);
  return e;
}

State displaced(const State& z, const Direction& d, double s) {
  if (d.N() != z.path.N) throw Error(ErrorCode::ShapeMismatch, "displaced: grid mismatch");
  State out = z;
  out.L = z.L + s * d.dL;
  for (std::size_t k = 0; k < d.dnodes.size(); ++k) out.path.interior[k] += s * d.dnodes[k];
  out.feasible = false;
  return out;
}

Direction difference(const State& a, const State& b) {
  if (a.path.N != b.path.N) throw Error(ErrorCode::ShapeMismatch, "difference: grid mismatch");
  Direction d(a.path.N);
  d.dL = a.L - b.L;
  for (std::size_t k = 0; k < d.dnodes.size(); ++k) d.dnodes[k] = a.path.interior[k] - b.path.interior[k];
  return d;
}

std::string to_csv(const State& z) {
  std::ostringstream os;
  os << "tau,x,y\n";
  char buf[128];
  for (int i = 0; i <= z.path.N; ++i) {
    const Vec2 p = z.path.node(i);
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", double(i) / z.path.N, p.x(), p.y());
    os << buf;
  }
  return os.str();
}

}  // namespace zermelo
