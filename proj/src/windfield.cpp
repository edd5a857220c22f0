#include "zermelo/windfield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace zermelo {

WindField WindField::constant(const Vec2& value) {
  WindField f;
  f.kind_ = Kind::Constant;
  f.vec_ = value;
  return f;
}

WindField WindField::linear_shear(const Mat2& A, const Vec2& b) {
  WindField f;
  f.kind_ = Kind::LinearShear;
  f.mat_ = A;
  f.vec_ = b;
  return f;
}

WindField WindField::gaussian_vortex(const Vec2& center, double amplitude, double width) {
  if (!(width > 0)) throw Error(ErrorCode::InvalidArgument, "gaussian_vortex: width must be positive");
  WindField f;
  f.kind_ = Kind::GaussianVortex;
  f.vec_ = center;
  f.amp_ = amplitude;
  f.width_ = width;
  return f;
}

WindField WindField::superposition(std::vector<WindField> parts) {
  WindField f;
  f.kind_ = Kind::Superposition;
  f.parts_ = std::move(parts);
  return f;
}

Vec2 WindField::eval(const Vec2& x) const {
  switch (kind_) {
    case Kind::Constant:
      return vec_;
    case Kind::LinearShear:
      return mat_ * x + vec_;
    case Kind::GaussianVortex: {
      const Vec2 r = x - vec_;
      const double E = std::exp(-r.squaredNorm() / (2.0 * width_ * width_));
      return amp_ * E * Vec2(-r.y(), r.x());
    }
    case Kind::Superposition: {
      Vec2 s = Vec2::Zero();
      for (const auto& p : parts_) s += p.eval(x);
      return s;
    }
  }
  return Vec2::Zero();
}

WindJet WindField::jet(const Vec2& x, int order) const {
  WindJet j;
  accumulate(x, order, j);
  return j;
}

void WindField::accumulate(const Vec2& x, int order, WindJet& out) const {
  switch (kind_) {
    case Kind::Constant:
      out.w += vec_;
      return;
    case Kind::LinearShear:
      out.w += mat_ * x + vec_;
      if (order >= 1) out.wx += mat_;
      return;
    case Kind::Superposition:
      for (const auto& p : parts_) p.accumulate(x, order, out);
      return;
    case Kind::GaussianVortex:
      break;
  }

  const Vec2 r = x - vec_;
  const double s2 = width_ * width_;
  const double E = std::exp(-r.squaredNorm() / (2.0 * s2));
  const Mat2 J = (Mat2() << 0.0, -1.0, 1.0, 0.0).finished();
  const Vec2 p = J * r;
  const double a = amp_;
  const auto kd = [](int i, int j) { return i == j ? 1.0 : 0.0; };

  // derivatives of the Gaussian envelope
  Vec2 E1;
  Mat2 E2;
  double E3[2][2][2];
  for (int j = 0; j < 2; ++j) {
    E1(j) = -r(j) / s2 * E;
    for (int k = 0; k < 2; ++k) {
      E2(j, k) = (r(j) * r(k) / (s2 * s2) - kd(j, k) / s2) * E;
      for (int l = 0; l < 2; ++l)
        E3[j][k][l] = (-r(j) * r(k) * r(l) / (s2 * s2 * s2) +
                       (kd(j, k) * r(l) + kd(j, l) * r(k) + kd(k, l) * r(j)) / (s2 * s2)) * E;
    }
  }

  out.w += a * E * p;
  if (order < 1) return;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.wx(i, j) += a * (J(i, j) * E + p(i) * E1(j));
  if (order < 2) return;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        out.wxx.slot[i](j, k) += a * (J(i, j) * E1(k) + J(i, k) * E1(j) + p(i) * E2(j, k));
  if (order < 3) return;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l)
          out.wxxx.slot[i][j](k, l) +=
              a * (J(i, j) * E2(k, l) + J(i, k) * E2(j, l) + J(i, l) * E2(j, k) + p(i) * E3[j][k][l]);
}

bool WindField::affine(Mat2* A, Vec2* b) const {
  Mat2 a = Mat2::Zero();
  Vec2 c = Vec2::Zero();
  switch (kind_) {
    case Kind::Constant:
      c = vec_;
      break;
    case Kind::LinearShear:
      a = mat_;
      c = vec_;
      break;
    case Kind::GaussianVortex:
      return false;
    case Kind::Superposition:
      for (const auto& p : parts_) {
        Mat2 pa;
        Vec2 pb;
        if (!p.affine(&pa, &pb)) return false;
        a += pa;
        c += pb;
      }
      break;
  }
  if (A) *A = a;
  if (b) *b = c;
  return true;
}

double WindField::length_scale() const {
  switch (kind_) {
    case Kind::GaussianVortex:
      return width_;
    case Kind::Superposition: {
      double s = std::numeric_limits<double>::infinity();
      for (const auto& p : parts_) s = std::min(s, p.length_scale());
      return s;
    }
    default:
      return std::numeric_limits<double>::infinity();
  }
}

bool WindBounds::derivative_bounds_valid(double vbar) const { return c0 < vbar / std::sqrt(5.0); }

namespace {

// max over the ellipse boundary of ‖A x + b‖; for convex ‖·‖ the maximum over
// the filled ellipse is attained there
double affine_speed_max(const Mat2& A, const Vec2& b, const Ellipse& e) {
  const Vec2 u = e.axis();
  const Vec2 v(-u.y(), u.x());
  const Vec2 p = A * e.center() + b;
  const Vec2 q = e.semi_major() * (A * u);
  const Vec2 r = e.semi_minor() * (A * v);
  const auto phi = [&](double t) { return (p + std::cos(t) * q + std::sin(t) * r).norm(); };

  const int n = 720;
  const double dt = 2.0 * std::numbers::pi / n;
  int best = 0;
  double fbest = phi(0.0);
  for (int k = 1; k < n; ++k) {
    const double f = phi(k * dt);
    if (f > fbest) { fbest = f; best = k; }
  }
  // golden-section refinement around the best sample
  double lo = (best - 1) * dt, hi = (best + 1) * dt;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = phi(x1), f2 = phi(x2);
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    if (f1 < f2) {
      lo = x1; x1 = x2; f1 = f2; x2 = lo + g * (hi - lo); f2 = phi(x2);
    } else {
      hi = x2; x2 = x1; f2 = f1; x1 = hi - g * (hi - lo); f1 = phi(x1);
    }
  }
  return std::max({fbest, f1, f2, phi(0.5 * (lo + hi))});
}

}  // namespace

WindBounds compute_bounds(const WindField& field, const Ellipse& domain, int grid_resolution,
                          double safety_factor) {
  if ((domain.focus_b - domain.focus_a).norm() == 0.0)
    throw Error(ErrorCode::DegenerateDomain, "compute_bounds: zero-length focal axis");
  if (domain.major_sum < (domain.focus_b - domain.focus_a).norm())
    throw Error(ErrorCode::DegenerateDomain, "compute_bounds: major_sum below focal distance");
  if (grid_resolution < 2) throw Error(ErrorCode::InvalidArgument, "compute_bounds: grid_resolution must be >= 2");
  if (safety_factor < 1.0) throw Error(ErrorCode::InvalidArgument, "compute_bounds: safety_factor must be >= 1");

  WindBounds wb;
  wb.domain = domain;
  Mat2 A;
  Vec2 b;
  if (field.affine(&A, &b)) {
    wb.method = WindBounds::Method::Analytic;
    wb.safety_factor = 1.0;
    wb.c0 = affine_speed_max(A, b, domain);
    wb.c1 = A.norm();  // Frobenius
    return wb;
  }

  // Grid in the ellipse frame, so degenerate (segment) domains still get samples.
  wb.method = WindBounds::Method::Sampled;
  wb.safety_factor = safety_factor;
  const Vec2 u = domain.axis();
  const Vec2 v(-u.y(), u.x());
  const double a = domain.semi_major(), bm = domain.semi_minor();
  const int nv = bm > 0 ? grid_resolution : 1;
  for (int i = 0; i < grid_resolution; ++i) {
    const double s = -a + 2.0 * a * i / (grid_resolution - 1);
    for (int k = 0; k < nv; ++k) {
      const double t = nv > 1 ? -bm + 2.0 * bm * k / (nv - 1) : 0.0;
      const Vec2 x = domain.center() + s * u + t * v;
      if (!domain.contains(x, 1e-12)) continue;
      const WindJet j = field.jet(x, 3);
      wb.c0 = std::max(wb.c0, j.w.norm());
      wb.c1 = std::max(wb.c1, j.wx.norm());
      wb.c2 = std::max(wb.c2, j.wxx.frobenius());
      wb.c3 = std::max(wb.c3, j.wxxx.frobenius());
    }
  }
  wb.c0 *= safety_factor;
  wb.c1 *= safety_factor;
  wb.c2 *= safety_factor;
  wb.c3 *= safety_factor;
  return wb;
}

namespace {

double max_abs(const Mat2& m) { return m.cwiseAbs().maxCoeff(); }
double max_abs(const Tensor3& t) { return std::max(max_abs(t.slot[0]), max_abs(t.slot[1])); }
double max_abs(const Tensor4& t) {
  double s = 0;
  for (const auto& r : t.slot)
    for (const auto& m : r) s = std::max(s, max_abs(m));
  return s;
}

double rel_err(double diff, double scale) { return scale > 0 ? diff / scale : diff; }

}  // namespace

FieldCheck verify_field(const WindField& field, int sample_count, std::uint64_t seed, Vec2 lo, Vec2 hi) {
  FieldCheck rep;
  rep.samples = sample_count;
  const double ls = field.length_scale();
  if (lo == hi) {
    lo = Vec2(-1, -1);
    hi = Vec2(1, 1);
    std::vector<const WindField*> stack{&field};
    bool first = true;
    while (!stack.empty()) {
      const WindField* f = stack.back();
      stack.pop_back();
      if (f->kind() == WindField::Kind::Superposition) {
        for (const auto& p : f->parts()) stack.push_back(&p);
      } else if (f->kind() == WindField::Kind::GaussianVortex) {
        const Vec2 ext = Vec2::Constant(3.0 * f->width());
        if (first) { lo = f->vector_param() - ext; hi = f->vector_param() + ext; first = false; }
        lo = lo.cwiseMin(f->vector_param() - ext);
        hi = hi.cwiseMax(f->vector_param() + ext);
      }
    }
  }
  // affine fields have no truncation error, so a large step only reduces rounding
  const double h = std::isfinite(ls) ? 1e-4 * ls : 0.5 * (hi - lo).maxCoeff();
  rep.step = h;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(lo.x(), hi.x()), uy(lo.y(), hi.y());
  for (int s = 0; s < sample_count; ++s) {
    const Vec2 x(ux(rng), uy(rng));
    const WindJet j0 = field.jet(x, 3);
    Mat2 fd1;
    Tensor3 fd2;
    Tensor4 fd3;
    for (int k = 0; k < 2; ++k) {
      Vec2 e = Vec2::Zero();
      e(k) = h;
      const WindJet jp = field.jet(x + e, 2), jm = field.jet(x - e, 2);
      fd1.col(k) = (jp.w - jm.w) / (2 * h);
      for (int i = 0; i < 2; ++i) {
        fd2.slot[i].col(k) = (jp.wx.row(i) - jm.wx.row(i)).transpose() / (2 * h);
        for (int jj = 0; jj < 2; ++jj)
          fd3.slot[i][jj].col(k) = (jp.wxx.slot[i].row(jj) - jm.wxx.slot[i].row(jj)).transpose() / (2 * h);
      }
    }
    const double d1 = max_abs(Mat2(fd1 - j0.wx));
    Tensor3 t2;
    Tensor4 t3;
    for (int i = 0; i < 2; ++i) {
      t2.slot[i] = fd2.slot[i] - j0.wxx.slot[i];
      for (int jj = 0; jj < 2; ++jj) t3.slot[i][jj] = fd3.slot[i][jj] - j0.wxxx.slot[i][jj];
    }
    rep.max_rel_error[0] = std::max(rep.max_rel_error[0], rel_err(d1, std::max(max_abs(j0.wx), max_abs(fd1))));
    rep.max_rel_error[1] =
        std::max(rep.max_rel_error[1], rel_err(max_abs(t2), std::max(max_abs(j0.wxx), max_abs(fd2))));
    rep.max_rel_error[2] =
        std::max(rep.max_rel_error[2], rel_err(max_abs(t3), std::max(max_abs(j0.wxxx), max_abs(fd3))));
  }
  rep.passed = rep.max_rel_error[0] <= 1e-5 && rep.max_rel_error[1] <= 1e-5 && rep.max_rel_error[2] <= 1e-5;
  return rep;
}

const char* to_string(WindField::Kind k) {
  switch (k) {
    case WindField::Kind::Constant: return "constant";
    case WindField::Kind::LinearShear: return "linear-shear";
    case WindField::Kind::GaussianVortex: return "gaussian-vortex";
    case WindField::Kind::Superposition: return "superposition";
  }
  return "?";
}

const char* to_string(WindBounds::Method m) {
  return m == WindBounds::Method::Analytic ? "analytic" : "sampled";
}

}  // namespace zermelo
