#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "zermelo/common.hpp"
#include "zermelo/trajectory.hpp"

namespace zermelo {

// Value and derivatives of w at one point, up to the requested order.
struct WindJet {
  Vec2 w = Vec2::Zero();
  Mat2 wx = Mat2::Zero();  // wx(i,j) = d_j w_i
  Tensor3 wxx;
  Tensor4 wxxx;
};

class WindField {
 public:
  enum class Kind { Constant, LinearShear, GaussianVortex, Superposition };

  static WindField constant(const Vec2& value);
  // w(x) = A x + b
  static WindField linear_shear(const Mat2& A, const Vec2& b = Vec2::Zero());
  // w(x) = a * rot90(x - c) * exp(-|x - c|^2 / (2 sigma^2))
  static WindField gaussian_vortex(const Vec2& center, double amplitude, double width);
  static WindField superposition(std::vector<WindField> parts);

  Kind kind() const { return kind_; }

  Vec2 eval(const Vec2& x) const;
  WindJet jet(const Vec2& x, int order = 3) const;

  Mat2 derivative1(const Vec2& x) const { return jet(x, 1).wx; }
  Tensor3 derivative2(const Vec2& x) const { return jet(x, 2).wxx; }
  Tensor4 derivative3(const Vec2& x) const { return jet(x, 3).wxxx; }

  // True when the field is affine (constant, linear, or a sum of those);
  // fills A and b of w = A x + b.
  bool affine(Mat2* A = nullptr, Vec2* b = nullptr) const;
  // Smallest intrinsic length scale (vortex widths); +inf for affine fields.
  double length_scale() const;

  const std::vector<WindField>& parts() const { return parts_; }
  const Vec2& vector_param() const { return vec_; }
  const Mat2& matrix_param() const { return mat_; }
  double amplitude() const { return amp_; }
  double width() const { return width_; }

 private:
  Kind kind_ = Kind::Constant;
  Vec2 vec_ = Vec2::Zero();  // constant value, shear offset, or vortex center
  Mat2 mat_ = Mat2::Zero();
  double amp_ = 0.0;
  double width_ = 1.0;
  std::vector<WindField> parts_;

  void accumulate(const Vec2& x, int order, WindJet& out) const;
};

struct WindBounds {
  double c0 = 0, c1 = 0, c2 = 0, c3 = 0;
  Ellipse domain;
  enum class Method { Analytic, Sampled } method = Method::Analytic;
  double safety_factor = 1.0;

  // the derivative bounds assume c0 < vbar/sqrt(5)
  bool derivative_bounds_valid(double vbar) const;
};

// Derivative-tensor norms are Frobenius norms (they dominate operator norms).
WindBounds compute_bounds(const WindField& field, const Ellipse& domain, int grid_resolution = 201,
                          double safety_factor = 1.1);

struct FieldCheck {
  std::array<double, 3> max_rel_error{0, 0, 0};  // orders 1..3
  int samples = 0;
  double step = 0;
  bool passed = false;
};

// Compares analytic derivatives against central differences of the next lower
// order at random points in [lo, hi]. An empty box picks one from the field.
FieldCheck verify_field(const WindField& field, int sample_count, std::uint64_t seed,
                        Vec2 lo = Vec2::Zero(), Vec2 hi = Vec2::Zero());

const char* to_string(WindField::Kind k);
const char* to_string(WindBounds::Method m);

}  // namespace zermelo
