#include "zermelo/functional.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <type_traits>

namespace zermelo {

PointwiseKernel make_kernel(const WindField& field, const Vec2& xi, const Vec2& xi_tau, double vbar, int order) {
  PointwiseKernel k;
  k.xi = xi;
  k.xi_tau = xi_tau;
  k.vbar = vbar;
  k.jet = field.jet(xi, order);
  if (!(k.jet.w.norm() < vbar))
    throw Error(ErrorCode::WindExceedsAirspeed, "wind speed reaches the airspeed");
  return k;
}

namespace {

double margin(const PointwiseKernel& k) { return k.vbar * k.vbar - k.jet.w.squaredNorm(); }

double discriminant(const PointwiseKernel& k) {
  const double vw = k.xi_tau.dot(k.jet.w);
  return vw * vw + margin(k) * k.xi_tau.squaredNorm();
}

void require_positive(double F) {
  if (!(F > 0.0)) throw Error(ErrorCode::SpeedBelowFloor, "velocity vanishes at a kernel point");
}

}  // namespace

KernelValues kernel_f(const PointwiseKernel& k) {
  const Vec2& w = k.jet.w;
  const double g = margin(k);
  if (!(g > 0.0)) throw Error(ErrorCode::WindExceedsAirspeed, "wind speed reaches the airspeed");
  const double vw = k.xi_tau.dot(w);
  const double F = vw * vw + g * k.xi_tau.squaredNorm();
  KernelValues r;
  r.g = g;
  r.F = F;
  r.f1 = -vw / g;
  r.f2 = std::sqrt(F) / g;
  r.f = (-vw + std::sqrt(F)) / g;
  return r;
}

namespace cascade {

double margin_d1(const PointwiseKernel& k, const Vec2& a) { return -2.0 * k.jet.w.dot(k.jet.wx * a); }

double margin_d2(const PointwiseKernel& k, const Vec2& a, const Vec2& b) {
  return -2.0 * (k.jet.wx * a).dot(k.jet.wx * b) - 2.0 * k.jet.wxx.contract(k.jet.w, a, b);
}

// Third derivative of the margin along (a, a, D). Differentiating the second
// derivative once more produces two distinct w_xx terms unless D ∥ a.
double margin_d3(const PointwiseKernel& k, const Vec2& a, const Vec2& D) {
  const auto& j = k.jet;
  return -4.0 * j.wxx.contract(j.wx * a, a, D) - 2.0 * j.wxx.contract(j.wx * D, a, a) -
         2.0 * j.wxxx.contract(j.w, a, a, D);
}

double discriminant_d1(const PointwiseKernel& k, const KernelDir& a) {
  const auto& j = k.jet;
  const Vec2& v = k.xi_tau;
  const double g = margin(k);
  return 2.0 * v.dot(j.w) * (a.dxi_tau.dot(j.w) + v.dot(j.wx * a.dxi)) + margin_d1(k, a.dxi) * v.dot(v) +
         2.0 * g * v.dot(a.dxi_tau);
}

double discriminant_d2(const PointwiseKernel& k, const KernelDir& a, const KernelDir& b) {
  const auto& j = k.jet;
  const Vec2& v = k.xi_tau;
  const Vec2& d = a.dxi;
  const Vec2& dt = a.dxi_tau;
  const Vec2& e = b.dxi;
  const Vec2& et = b.dxi_tau;
  const double g = margin(k);
  const double vw = v.dot(j.w);
  return 2.0 * vw * dt.dot(j.wx * e)
       + 2.0 * v.dot(j.wx * e) * dt.dot(j.w)
       + 2.0 * et.dot(j.w) * dt.dot(j.w)
       + 2.0 * v.dot(j.wx * e) * v.dot(j.wx * d)
       + 2.0 * vw * j.wxx.contract(v, d, e)
       + 2.0 * et.dot(j.w) * v.dot(j.wx * d)
       + 2.0 * vw * et.dot(j.wx * d)
       + margin_d2(k, d, e) * v.dot(v)
       + 2.0 * margin_d1(k, d) * et.dot(v)
       + 2.0 * margin_d1(k, e) * v.dot(dt)
       + 2.0 * g * et.dot(dt);
}

double discriminant_d3(const PointwiseKernel& k, const KernelDir& a, const KernelDir& D) {
  const auto& j = k.jet;
  const Vec2& v = k.xi_tau;
  const Vec2& d = a.dxi;
  const Vec2& dt = a.dxi_tau;
  const Vec2& e = D.dxi;
  const Vec2& et = D.dxi_tau;
  const double vw = v.dot(j.w);
  const double vJd = v.dot(j.wx * d);
  const double vJe = v.dot(j.wx * e);
  const double dtw = dt.dot(j.w);
  const double etw = et.dot(j.w);
  const double dtJd = dt.dot(j.wx * d);
  const double Hvdd = j.wxx.contract(v, d, d);
  const double Hvde = j.wxx.contract(v, d, e);
  return 4.0 * etw * dtJd
       + 4.0 * vJe * dtJd
       + 4.0 * vw * j.wxx.contract(dt, d, e)
       + 4.0 * dt.dot(j.wx * e) * vJd
       + 4.0 * dtw * et.dot(j.wx * d)
       + 4.0 * dtw * Hvde
       + 4.0 * dtw * dt.dot(j.wx * e)
       + 4.0 * vJd * et.dot(j.wx * d)
       + 4.0 * vJd * Hvde
       + 2.0 * etw * Hvdd
       + 2.0 * vJe * Hvdd
       + 2.0 * vw * j.wxxx.contract(v, d, d, e)
       + 2.0 * vw * j.wxx.contract(et, d, d)
       + margin_d3(k, d, e) * v.dot(v)
       + 2.0 * margin_d2(k, d, d) * et.dot(v)
       + 4.0 * margin_d2(k, e, d) * dt.dot(v)
       + 4.0 * margin_d1(k, d) * dt.dot(et)
       + 2.0 * margin_d1(k, e) * dt.dot(dt);
}

double tailwind_d1(const PointwiseKernel& k, const KernelDir& a) {
  const auto& j = k.jet;
  const Vec2& v = k.xi_tau;
  const double g = margin(k);
  return std::pow(g, -2) * v.dot(j.w) * margin_d1(k, a.dxi) - v.dot(j.wx * a.dxi) / g - j.w.dot(a.dxi_tau) / g;
}

double tailwind_d2(const PointwiseKernel& k, const KernelDir& a, const KernelDir& b) {
  const auto& j = k.jet;
  const Vec2& v = k.xi_tau;
  const Vec2& d = a.dxi;
  const Vec2& dt = a.dxi_tau;
  const Vec2& e = b.dxi;
  const Vec2& et = b.dxi_tau;
  const double g = margin(k);
  const double g1 = 1.0 / g, g2 = g1 * g1, g3 = g2 * g1;
  const double vw = v.dot(j.w);
  const double gd = margin_d1(k, d), ge = margin_d1(k, e);
  return -2.0 * g3 * ge * vw * gd
       + g2 * et.dot(j.w) * gd
       + g2 * v.dot(j.wx * e) * gd
       + g2 * vw * margin_d2(k, d, e)
       + g2 * ge * v.dot(j.wx * d)
       - g1 * et.dot(j.wx * d)
       - g1 * j.wxx.contract(v, d, e)
       + g2 * ge * j.w.dot(dt)
       - g1 * dt.dot(j.wx * e);
}

double tailwind_d3(const PointwiseKernel& k, const KernelDir& a, const KernelDir& D) {
  const auto& j = k.jet;
  const Vec2& v = k.xi_tau;
  const Vec2& d = a.dxi;
  const Vec2& dt = a.dxi_tau;
  const Vec2& e = D.dxi;
  const Vec2& et = D.dxi_tau;
  const double g = margin(k);
  const double g1 = 1.0 / g, g2 = g1 * g1, g3 = g2 * g1, g4 = g2 * g2;
  const double vw = v.dot(j.w);
  const double gd = margin_d1(k, d), ge = margin_d1(k, e);
  const double gdd = margin_d2(k, d, d), ged = margin_d2(k, e, d);
  const double vJd = v.dot(j.wx * d), vJe = v.dot(j.wx * e);
  return 6.0 * g4 * ge * gd * gd * vw
       - 4.0 * g3 * gd * ged * vw
       - 2.0 * g3 * ge * gdd * vw
       + g2 * margin_d3(k, d, e) * vw
       - 2.0 * g3 * gd * gd * vJe
       + g2 * gdd * vJe
       - 4.0 * g3 * ge * gd * vJd
       + 2.0 * g2 * ged * vJd
       + 2.0 * g2 * gd * j.wxx.contract(v, d, e)
       + g2 * ge * j.wxx.contract(v, d, d)
       - g1 * j.wxxx.contract(v, d, d, e)
       // Δξ_τ terms
       - 2.0 * g3 * gd * gd * et.dot(j.w)
       + g2 * gdd * et.dot(j.w)
       + 2.0 * g2 * gd * et.dot(j.wx * d)
       - g1 * j.wxx.contract(et, d, d)
       // δξ_τ terms
       - 4.0 * g3 * ge * gd * dt.dot(j.w)
       + 2.0 * g2 * ged * dt.dot(j.w)
       + 2.0 * g2 * gd * dt.dot(j.wx * e)
       + 2.0 * g2 * ge * dt.dot(j.wx * d)
       - 2.0 * g1 * j.wxx.contract(dt, d, e);
}

double length_d1(const PointwiseKernel& k, const KernelDir& a) {
  const double g = margin(k);
  const double F = discriminant(k);
  require_positive(F);
  return -std::pow(g, -2) * margin_d1(k, a.dxi) * std::sqrt(F) + 0.5 / g / std::sqrt(F) * discriminant_d1(k, a);
}

double length_d2(const PointwiseKernel& k, const KernelDir& a, const KernelDir& b) {
  const double g = margin(k);
  const double F = discriminant(k);
  require_positive(F);
  const double g1 = 1.0 / g, g2 = g1 * g1, g3 = g2 * g1;
  const double s = std::sqrt(F);
  const double gd = margin_d1(k, a.dxi), ge = margin_d1(k, b.dxi);
  const double Fd = discriminant_d1(k, a), Fe = discriminant_d1(k, b);
  return 2.0 * g3 * ge * gd * s
       - g2 * margin_d2(k, a.dxi, b.dxi) * s
       - 0.5 * g2 * gd / s * Fe
       - 0.5 * g2 * ge / s * Fd
       + 0.5 * g1 / s * discriminant_d2(k, a, b)
       - 0.25 * g1 / (F * s) * Fd * Fe;
}

double length_d3(const PointwiseKernel& k, const KernelDir& a, const KernelDir& D) {
  const double g = margin(k);
  const double F = discriminant(k);
  require_positive(F);
  const double g1 = 1.0 / g, g2 = g1 * g1, g3 = g2 * g1, g4 = g2 * g2;
  const double s = std::sqrt(F);
  const double Fm12 = 1.0 / s, Fm32 = Fm12 / F, Fm52 = Fm32 / F;
  const Vec2& d = a.dxi;
  const Vec2& e = D.dxi;
  const double gd = margin_d1(k, d), ge = margin_d1(k, e);
  const double gdd = margin_d2(k, d, d), ged = margin_d2(k, e, d);
  const double Fd = discriminant_d1(k, a), Fe = discriminant_d1(k, D);
  const double Fdd = discriminant_d2(k, a, a), Fde = discriminant_d2(k, a, D);
  return -6.0 * g4 * ge * gd * gd * s
       + 4.0 * g3 * gd * ged * s
       + g3 * gd * gd * Fm12 * Fe
       + 2.0 * g3 * ge * gdd * s
       - g2 * margin_d3(k, d, e) * s
       - 0.5 * g2 * gdd * Fm12 * Fe
       + g3 * ge * gd * Fm12 * Fd
       - 0.5 * g2 * ged * Fm12 * Fd
       + 0.25 * g2 * gd * Fm32 * Fd * Fe
       - 0.5 * g2 * gd * Fm12 * Fde
       + g3 * ge * gd * Fm12 * Fd
       - 0.5 * g2 * ged * Fm12 * Fd
       + 0.25 * g2 * gd * Fm32 * Fd * Fe
       - 0.5 * g2 * gd * Fm12 * Fde
       + 0.25 * g2 * ge * Fm32 * Fd * Fd
       + 0.375 * g1 * Fm52 * Fd * Fd * Fe
       - 0.5 * g1 * Fm32 * Fd * Fde
       - 0.5 * g2 * ge * Fm12 * Fdd
       - 0.25 * g1 * Fm32 * Fdd * Fe
       + 0.5 * g1 * Fm12 * discriminant_d3(k, a, D);
}

}  // namespace cascade

double kernel_d1(const PointwiseKernel& k, const KernelDir& d) {
  return cascade::tailwind_d1(k, d) + cascade::length_d1(k, d);
}

double kernel_d2(const PointwiseKernel& k, const KernelDir& d, const KernelDir& dt) {
  return cascade::tailwind_d2(k, d, dt) + cascade::length_d2(k, d, dt);
}

double kernel_d3(const PointwiseKernel& k, const KernelDir& d, const KernelDir& D, double speed_floor) {
  if (!(k.xi_tau.norm() >= speed_floor) || k.xi_tau.norm() == 0.0)
    throw Error(ErrorCode::SpeedBelowFloor, "kernel_d3: speed below floor");
  return cascade::tailwind_d3(k, d, D) + cascade::length_d3(k, d, D);
}

double norm(const Direction& d, const Multiplier& dl, NormKind which) {
  const double base = norm(d, which);
  if (which == NormKind::Yinf) return base + dl.sup();
  if (which == NormKind::Y2) return base + dl.l2();
  return base;
}

double norm(const KKTIterate& chi, NormKind which) {
  const double base = norm(chi.z, which);
  if (which == NormKind::Yinf) return base + chi.lambda.sup();
  if (which == NormKind::Y2) return base + chi.lambda.l2();
  return base;
}

// ---------------------------------------------------------------------------
// quadrature

namespace {

void check_Q(int Q) {
  if (Q < 1) throw Error(ErrorCode::InvalidArgument, "quadrature needs Q >= 1");
}

// coefficient index of the x component of interior node m (1..N-1)
inline int node_index(int m) { return 1 + 2 * (m - 1); }

template <class Fn>
void for_each_point(const State& z, int Q, Fn fn) {
  const int N = z.path.N;
  for (int i = 0; i < N; ++i) {
    const Vec2 a = z.path.node(i), b = z.path.node(i + 1);
    const Vec2 v = z.path.velocity(i);
    for (int q = 0; q < Q; ++q) {
      const double s = (q + 0.5) / Q;
      fn(i, s, Vec2((1.0 - s) * a + s * b), v);
    }
  }
}

KernelDir local_dir(const Direction& d, int i, double s) {
  return {Vec2((1.0 - s) * d.node(i) + s * d.node(i + 1)), d.velocity(i)};
}

}  // namespace

double travel_time(const State& z, const WindField& field, double vbar, int Q) {
  check_Q(Q);
  const double wgt = 1.0 / (double(z.path.N) * Q);
  double T = 0.0;
  for_each_point(z, Q, [&](int, double, const Vec2& x, const Vec2& v) {
    const Vec2 w = field.eval(x);
    const double g = vbar * vbar - w.squaredNorm();
    if (!(g > 0.0)) throw Error(ErrorCode::WindExceedsAirspeed, "travel_time: wind reaches the airspeed");
    const double vw = v.dot(w);
    T += wgt * (-vw + std::sqrt(vw * vw + g * v.squaredNorm())) / g;
  });
  return T;
}

Vec travel_time_gradient(const State& z, const WindField& field, double vbar, int Q) {
  check_Q(Q);
  const int N = z.path.N;
  const double wgt = 1.0 / (double(N) * Q);
  Vec grad = Vec::Zero(Direction::size_for(N));
  for_each_point(z, Q, [&](int i, double s, const Vec2& x, const Vec2& v) {
    const PointwiseKernel k = make_kernel(field, x, v, vbar, 1);
    Vec2 gx, gv;
    for (int c = 0; c < 2; ++c) {
      KernelDir e;
      e.dxi(c) = 1.0;
      gx(c) = kernel_d1(k, e);
      KernelDir et;
      et.dxi_tau(c) = 1.0;
      gv(c) = kernel_d1(k, et);
    }
    if (i >= 1) grad.segment<2>(node_index(i)) += wgt * ((1.0 - s) * gx - double(N) * gv);
    if (i + 1 <= N - 1) grad.segment<2>(node_index(i + 1)) += wgt * (s * gx + double(N) * gv);
  });
  return grad;
}

Mat travel_time_hessian(const State& z, const WindField& field, double vbar, int Q) {
  check_Q(Q);
  const int N = z.path.N;
  const int n = Direction::size_for(N);
  const double wgt = 1.0 / (double(N) * Q);
  Mat H = Mat::Zero(n, n);
  for_each_point(z, Q, [&](int i, double s, const Vec2& x, const Vec2& v) {
    const PointwiseKernel k = make_kernel(field, x, v, vbar, 2);
    KernelDir basis[4];
    basis[0].dxi = {1, 0};
    basis[1].dxi = {0, 1};
    basis[2].dxi_tau = {1, 0};
    basis[3].dxi_tau = {0, 1};
    Eigen::Matrix4d M;
    for (int p = 0; p < 4; ++p)
      for (int q = p; q < 4; ++q) M(p, q) = M(q, p) = kernel_d2(k, basis[p], basis[q]);
    // local (ξ, ξ_τ) as a function of the two node positions
    Eigen::Matrix4d J = Eigen::Matrix4d::Zero();
    J.block<2, 2>(0, 0) = (1.0 - s) * Mat2::Identity();
    J.block<2, 2>(0, 2) = s * Mat2::Identity();
    J.block<2, 2>(2, 0) = -double(N) * Mat2::Identity();
    J.block<2, 2>(2, 2) = double(N) * Mat2::Identity();
    const Eigen::Matrix4d B = wgt * (J.transpose() * M * J);
    const int idx[2] = {i >= 1 ? node_index(i) : -1, i + 1 <= N - 1 ? node_index(i + 1) : -1};
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c)
        if (idx[r] >= 0 && idx[c] >= 0) H.block<2, 2>(idx[r], idx[c]) += B.block<2, 2>(2 * r, 2 * c);
  });
  // exact symmetry: keep the upper triangle
  H.triangularView<Eigen::StrictlyLower>() = H.transpose().triangularView<Eigen::StrictlyLower>();
  return H;
}

double travel_time_d2(const State& z, const Direction& a, const Direction& b, const WindField& field, double vbar,
                      int Q) {
  check_Q(Q);
  if (a.N() != z.path.N || b.N() != z.path.N) throw Error(ErrorCode::ShapeMismatch, "travel_time_d2: grid mismatch");
  const double wgt = 1.0 / (double(z.path.N) * Q);
  double s2 = 0.0;
  for_each_point(z, Q, [&](int i, double s, const Vec2& x, const Vec2& v) {
    const PointwiseKernel k = make_kernel(field, x, v, vbar, 2);
    s2 += wgt * kernel_d2(k, local_dir(a, i, s), local_dir(b, i, s));
  });
  return s2;
}

double travel_time_d3(const State& z, const Direction& a, const Direction& D, const WindField& field, double vbar,
                      int Q, double speed_floor) {
  check_Q(Q);
  if (a.N() != z.path.N || D.N() != z.path.N) throw Error(ErrorCode::ShapeMismatch, "travel_time_d3: grid mismatch");
  const double wgt = 1.0 / (double(z.path.N) * Q);
  double s3 = 0.0;
  for_each_point(z, Q, [&](int i, double s, const Vec2& x, const Vec2& v) {
    const PointwiseKernel k = make_kernel(field, x, v, vbar, 3);
    s3 += wgt * kernel_d3(k, local_dir(a, i, s), local_dir(D, i, s), speed_floor);
  });
  return s3;
}

Vec constraint(const State& z) {
  const int N = z.path.N;
  Vec h(N);
  for (int i = 0; i < N; ++i) h(i) = z.path.velocity(i).squaredNorm() - z.L * z.L;
  return h;
}

Vec constraint_d1(const State& z, const Direction& d) {
  if (d.N() != z.path.N) throw Error(ErrorCode::ShapeMismatch, "constraint_d1: grid mismatch");
  const int N = z.path.N;
  Vec h(N);
  for (int i = 0; i < N; ++i) h(i) = 2.0 * z.path.velocity(i).dot(d.velocity(i)) - 2.0 * z.L * d.dL;
  return h;
}

Vec constraint_d2(const Direction& a, const Direction& b) {
  if (a.N() != b.N()) throw Error(ErrorCode::ShapeMismatch, "constraint_d2: grid mismatch");
  const int N = a.N();
  Vec h(N);
  for (int i = 0; i < N; ++i) h(i) = 2.0 * (a.velocity(i).dot(b.velocity(i)) - a.dL * b.dL);
  return h;
}

Mat constraint_jacobian(const State& z) {
  const int N = z.path.N;
  Mat A = Mat::Zero(N, Direction::size_for(N));
  for (int i = 0; i < N; ++i) {
    const Vec2 v = z.path.velocity(i);
    A(i, 0) = -2.0 * z.L;
    if (i >= 1) A.block<1, 2>(i, node_index(i)) = -2.0 * double(N) * v.transpose();
    if (i + 1 <= N - 1) A.block<1, 2>(i, node_index(i + 1)) = 2.0 * double(N) * v.transpose();
  }
  return A;
}

Residual lagrangian_grad(const KKTIterate& chi, const WindField& field, double vbar, int Q) {
  if (chi.lambda.N() != chi.z.path.N) throw Error(ErrorCode::ShapeMismatch, "lagrangian_grad: multiplier size");
  Residual r;
  r.grad_z = travel_time_gradient(chi.z, field, vbar, Q) + constraint_jacobian(chi.z).transpose() * chi.lambda.values;
  r.grad_lambda = constraint(chi.z);
  return r;
}

}  // namespace zermelo

namespace zermelo {

namespace {

double rel_err(double fd, double an) {
  const double den = std::max({std::abs(fd), std::abs(an), 1e-300});
  return std::abs(fd - an) / den;
}

}  // namespace

// five-point central difference, fourth order
template <class Fn>
std::invoke_result_t<Fn, double> central5(Fn&& fn, double h) {
  return (fn(-2 * h) - 8.0 * fn(-h) + 8.0 * fn(h) - fn(2 * h)) / (12.0 * h);
}

DerivativeCheck check_derivatives(const WindField& field, double vbar, const Vec2& x_O, const Vec2& x_D, int N,
                                  int samples, std::uint64_t seed, int Q) {
  const Vec2 chord = x_D - x_O;
  const double Lt = chord.norm();
  if (!(Lt > 0)) throw Error(ErrorCode::CoincidentEndpoints, "check_derivatives: coincident endpoints");
  const Vec2 e = chord / Lt, nrm(-e.y(), e.x());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::normal_distribution<double> G(0.0, 1.0);
  const auto g2 = [&]() { return Vec2(G(rng), G(rng)); };
  const auto admissible = [&](const Vec2& x) { return field.eval(x).norm() <= 0.9 * vbar; };

  DerivativeCheck out;
  auto& err = out.max_rel_error;
  for (int s = 0; s < samples; ++s) {
    // kernel sample near the chord
    Vec2 x;
    do {
      x = x_O + U(rng) * chord + (0.6 * U(rng) - 0.3) * Lt * nrm;
    } while (!admissible(x));
    const double ang = 1.2 * U(rng) - 0.6, spd = Lt * (0.5 + 1.5 * U(rng));
    const Vec2 xt = spd * (std::cos(ang) * e + std::sin(ang) * nrm);
    KernelDir a{g2(), Lt * g2()}, D{g2(), Lt * g2()};
    const double t = 1e-3 * Lt / std::sqrt(a.dxi.squaredNorm() + a.dxi_tau.squaredNorm() / (Lt * Lt));
    const double tD = 1e-3 * Lt / std::sqrt(D.dxi.squaredNorm() + D.dxi_tau.squaredNorm() / (Lt * Lt));
    const auto at = [&](const KernelDir& d, double h) {
      return make_kernel(field, x + h * d.dxi, xt + h * d.dxi_tau, vbar, 3);
    };
    const PointwiseKernel k = make_kernel(field, x, xt, vbar, 3);
    const KernelDir b{g2(), Lt * g2()};
    const double tb = 1e-3 * Lt / std::sqrt(b.dxi.squaredNorm() + b.dxi_tau.squaredNorm() / (Lt * Lt));
    err[0] = std::max(err[0], rel_err(central5([&](double h) { return kernel_f(at(a, h)).f; }, t), kernel_d1(k, a)));
    err[1] = std::max(err[1], rel_err(central5([&](double h) { return kernel_d1(at(b, h), a); }, tb), kernel_d2(k, a, b)));
    err[2] = std::max(err[2], rel_err(central5([&](double h) { return kernel_d2(at(D, h), a, a); }, tD),
                                      kernel_d3(k, a, D)));

    // assembled sample: straight line plus a few smooth modes
    State z;
    for (;;) {
      z = straight_line(x_O, x_D, N);
      const int modes = 1 + int(3 * U(rng));
      std::vector<std::pair<int, double>> coef;
      for (int m = 0; m < modes; ++m) coef.emplace_back(1 + int(3 * U(rng)), 0.2 * Lt * (2 * U(rng) - 1) / modes);
      bool ok = true;
      for (int i = 1; i < N && ok; ++i) {
        double off = 0;
        for (auto [kk, c] : coef) off += c * std::sin(std::numbers::pi * kk * double(i) / N);
        z.path.interior[i - 1] += off * nrm;
        ok = admissible(z.path.interior[i - 1]);
      }
      if (ok) break;
    }
    Direction d2(N);
    d2.dL = G(rng);
    for (auto& p : d2.dnodes) p = 0.1 * Lt * g2();
    // T' coordinate by coordinate, compared as a vector: single directional
    // derivatives can cancel down to nothing
    const double h = 1e-3;
    const Vec an1 = travel_time_gradient(z, field, vbar, Q);
    Vec fd1(an1.size());
    for (int c = 0; c < an1.size(); ++c) {
      const Direction ec = Direction::from_coefficients(Vec::Unit(an1.size(), c));
      fd1(c) = central5([&](double s) { return travel_time(displaced(z, ec, s), field, vbar, Q); }, 1e-4 * Lt);
    }
    err[3] = std::max(err[3], (fd1 - an1).norm() / std::max(an1.norm(), 1e-300));
    const Vec fd2 = central5([&](double s) -> Vec { return travel_time_gradient(displaced(z, d2, s), field, vbar, Q); }, h);
    const Vec an2 = travel_time_hessian(z, field, vbar, Q) * d2.coefficients();
    err[4] = std::max(err[4], (fd2 - an2).norm() / std::max(an2.norm(), 1e-300));
    ++out.samples;
  }
  return out;
}

}  // namespace zermelo
