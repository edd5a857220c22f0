#pragma once

#include <array>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace zermelo {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Second derivative of a 2D vector field: slot[i](j,k) = d_j d_k w_i.
struct Tensor3 {
  std::array<Mat2, 2> slot{Mat2::Zero(), Mat2::Zero()};

  // a^T w_xx[b, c]
  double contract(const Vec2& a, const Vec2& b, const Vec2& c) const {
    return a.x() * b.dot(slot[0] * c) + a.y() * b.dot(slot[1] * c);
  }
  // the vector w_xx[b, c]
  Vec2 apply(const Vec2& b, const Vec2& c) const {
    return {b.dot(slot[0] * c), b.dot(slot[1] * c)};
  }
  double frobenius() const {
    return std::sqrt(slot[0].squaredNorm() + slot[1].squaredNorm());
  }
};

// Third derivative: slot[i][j](k,l) = d_j d_k d_l w_i.
struct Tensor4 {
  std::array<std::array<Mat2, 2>, 2> slot{
      {{Mat2::Zero(), Mat2::Zero()}, {Mat2::Zero(), Mat2::Zero()}}};

  // a^T w_xxx[b, c, d]
  double contract(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) const {
    double s = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) s += a(i) * b(j) * c.dot(slot[i][j] * d);
    return s;
  }
  double frobenius() const {
    double s = 0.0;
    for (const auto& row : slot)
      for (const auto& m : row) s += m.squaredNorm();
    return std::sqrt(s);
  }
};

enum class ErrorCode {
  InvalidArgument,
  WindExceedsAirspeed,
  SpeedBelowFloor,
  ShapeMismatch,
  DegenerateDomain,
  ZeroLengthInterval,
  CoincidentEndpoints,
  Singular,
  RankDeficient,
  TooFewIterates,
  Disconnected,
  DirectionCondition,
  ConfigParse,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace zermelo
