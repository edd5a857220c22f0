#pragma once

#include <array>
#include <cstdint>

#include "zermelo/common.hpp"
#include "zermelo/trajectory.hpp"
#include "zermelo/windfield.hpp"

namespace zermelo {

// Everything the integrand needs at one point: position, velocity, the wind
// jet there and the airspeed.
struct PointwiseKernel {
  Vec2 xi = Vec2::Zero();
  Vec2 xi_tau = Vec2::Zero();
  WindJet jet;
  double vbar = 1.0;
};

// Throws WindExceedsAirspeed if ‖w(xi)‖ >= vbar.
PointwiseKernel make_kernel(const WindField& field, const Vec2& xi, const Vec2& xi_tau, double vbar,
                            int order = 3);

// (δξ, δξ_τ) pair
struct KernelDir {
  Vec2 dxi = Vec2::Zero();
  Vec2 dxi_tau = Vec2::Zero();
};

struct KernelValues {
  double f, f1, f2, g, F;
};

KernelValues kernel_f(const PointwiseKernel& k);
double kernel_d1(const PointwiseKernel& k, const KernelDir& d);
double kernel_d2(const PointwiseKernel& k, const KernelDir& d, const KernelDir& dt);
// f'''[d, d, D]; requires ‖ξ_τ‖ >= speed_floor
double kernel_d3(const PointwiseKernel& k, const KernelDir& d, const KernelDir& D, double speed_floor = 0.0);

// Building blocks, exposed for tests: margin g = vbar² − ‖w‖², discriminant
// F = (ξ_τᵀw)² + g ξ_τᵀξ_τ, tailwind term f1 = −ξ_τᵀw / g, length term
// f2 = √F / g.
namespace cascade {
double margin_d1(const PointwiseKernel& k, const Vec2& a);
double margin_d2(const PointwiseKernel& k, const Vec2& a, const Vec2& b);
double margin_d3(const PointwiseKernel& k, const Vec2& a, const Vec2& D);
double discriminant_d1(const PointwiseKernel& k, const KernelDir& a);
double discriminant_d2(const PointwiseKernel& k, const KernelDir& a, const KernelDir& b);
double discriminant_d3(const PointwiseKernel& k, const KernelDir& a, const KernelDir& D);
double tailwind_d1(const PointwiseKernel& k, const KernelDir& a);
double tailwind_d2(const PointwiseKernel& k, const KernelDir& a, const KernelDir& b);
double tailwind_d3(const PointwiseKernel& k, const KernelDir& a, const KernelDir& D);
double length_d1(const PointwiseKernel& k, const KernelDir& a);
double length_d2(const PointwiseKernel& k, const KernelDir& a, const KernelDir& b);
double length_d3(const PointwiseKernel& k, const KernelDir& a, const KernelDir& D);
}  // namespace cascade

struct Multiplier {
  Vec values;
  Multiplier() = default;
  explicit Multiplier(int N) : values(Vec::Zero(N)) {}
  explicit Multiplier(Vec v) : values(std::move(v)) {}
  int N() const { return int(values.size()); }
  double sup() const { return values.size() ? values.cwiseAbs().maxCoeff() : 0.0; }
  // piecewise-constant L² norm on ]0,1[
  double l2() const { return values.size() ? std::sqrt(values.squaredNorm() / double(values.size())) : 0.0; }
};

struct KKTIterate {
  State z;
  Multiplier lambda;
};

// Y norms of an iterate difference (δz, δλ); Z kinds ignore the multiplier.
double norm(const Direction& d, const Multiplier& dl, NormKind which);
double norm(const KKTIterate& chi, NormKind which);

struct Residual {
  Vec grad_z;
  Vec grad_lambda;
  double norm() const { return std::sqrt(grad_z.squaredNorm() + grad_lambda.squaredNorm()); }
};

// T is discretized by the midpoint rule with Q sub-samples per interval; the
// derivatives below differentiate that same discrete sum.
double travel_time(const State& z, const WindField& field, double vbar, int Q = 4);
Vec travel_time_gradient(const State& z, const WindField& field, double vbar, int Q = 4);
Mat travel_time_hessian(const State& z, const WindField& field, double vbar, int Q = 4);
// direct quadrature of T''[a, b] and T'''[a, a, D]
double travel_time_d2(const State& z, const Direction& a, const Direction& b, const WindField& field,
                      double vbar, int Q = 4);
double travel_time_d3(const State& z, const Direction& a, const Direction& D, const WindField& field,
                      double vbar, int Q = 4, double speed_floor = 0.0);

Vec constraint(const State& z);
Vec constraint_d1(const State& z, const Direction& d);
Vec constraint_d2(const Direction& a, const Direction& b);
Mat constraint_jacobian(const State& z);

// grad_z = T' + Σ λ_i h_i', grad_lambda = h
Residual lagrangian_grad(const KKTIterate& chi, const WindField& field, double vbar, int Q = 4);

// Central-difference check of the analytic derivatives at random admissible
// samples around the chord x_O -> x_D. Error slots: kernel f', f'', f''',
// assembled T', T''.
struct DerivativeCheck {
  int samples = 0;
  std::array<double, 5> max_rel_error{0, 0, 0, 0, 0};
  static constexpr std::array<const char*, 5> names{"kernel_d1", "kernel_d2", "kernel_d3", "T_gradient",
                                                    "T_hessian"};
};

DerivativeCheck check_derivatives(const WindField& field, double vbar, const Vec2& x_O, const Vec2& x_D, int N,
                                  int samples, std::uint64_t seed, int Q = 4);

}  // namespace zermelo
