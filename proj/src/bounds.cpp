#include "zermelo/bounds.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <thread>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace zermelo {

namespace {

double stretch(double vbar, double c0) { return (vbar + c0) / (vbar - c0); }

double kappa_formula(double R, double c, double c0, double vbar, double Lt) {
  if (!(R < c)) throw Error(ErrorCode::InvalidArgument, "kappa: need R < c");
  const double s = stretch(vbar, c0) + R / Lt;
  return (c - R) / std::sqrt(3.0 / 8.0 + 2.0 * s * s);
}

}  // namespace

BoundSet compute_constants(const WindBounds& wb, double vbar, double L_tilde, double R, double L_star) {
  if (!(vbar > 0)) throw Error(ErrorCode::InvalidArgument, "compute_constants: vbar must be positive");
  if (!(L_tilde > 0)) throw Error(ErrorCode::InvalidArgument, "compute_constants: L_tilde must be positive");
  if (!(R >= 0) || !(R < L_tilde)) throw Error(ErrorCode::InvalidArgument, "compute_constants: need 0 <= R < L_tilde");
  if (!(wb.c0 < vbar)) throw Error(ErrorCode::WindExceedsAirspeed, "compute_constants: c0 >= vbar");

  BoundSet bs;
  bs.c0 = wb.c0;
  bs.c1 = wb.c1;
  bs.c2 = wb.c2;
  bs.c3 = wb.c3;
  bs.vbar = vbar;
  bs.v_low = std::sqrt(vbar * vbar - wb.c0 * wb.c0);
  bs.v_high = std::sqrt(vbar * vbar + wb.c0 * wb.c0);
  bs.wind_bounds_sampled = wb.method == WindBounds::Method::Sampled;
  bs.derivative_bounds_valid = wb.derivative_bounds_valid(vbar);
  bs.L_tilde = L_tilde;
  bs.L_low = L_tilde;
  bs.L_high = L_tilde * stretch(vbar, wb.c0);
  bs.L_star = L_star;
  bs.R = R;

  const double v = bs.v_low, c1 = wb.c1, c2 = wb.c2, c3 = wb.c3;
  bs.alpha0 = 21.0 * c1 / (4.0 * v * v);
  bs.alpha1 = 7.0 / (2.0 * v);
  bs.beta0 = 14.0 * c1 * c1 / (v * v * v) + 4.0 * c2 / (v * v);
  bs.beta1 = 7.0 * c1 / (v * v);
  bs.beta2 = 4.0 / v;
  bs.gamma[0] = 2.0 / std::pow(v, 4) * (37.0 * c1 * c1 * c1 + 21.0 * c1 * c2 * v + 2.0 * c3 * v * v);
  bs.gamma[1] = (29.0 * c1 * c1 + 7.0 * v * c2) / (v * v * v);
  bs.gamma[2] = (57.0 * c1 * c1 + 13.0 * v * c2) / (v * v * v);
  bs.gamma[3] = 40.0 * c1 / (v * v);
  bs.gamma[4] = 20.0 * c1 / (v * v);
  bs.gamma[5] = 18.0 / v;

  bs.Gamma = Gamma_of(bs, R);
  bs.B_upper = B_upper_of(bs, R);
  {
    const double c0 = wb.c0, vb2 = vbar * vbar;
    bs.beta_hat1 = 4.0 / std::pow(v, 12) *
                   (5.0 + 80.0 * c0 * c1 * vb2 * vb2 + 8.0 * c0 * c1 * vb2 + 12.0 * c0 * c1 + 16.0 * c0 * c2 +
                    4.0 * c0 * c3 + 16.0 * c1 * c1 + 12.0 * c1 * c2 + 4.0 * c1 + 4.0 * c2 + 2.0 * c3);
  }
  bs.beta_hat2 = beta_hat2_of(bs, R);
  bs.B_hat = std::max(bs.beta_hat1, bs.beta_hat2);

  const Provenance wind = bs.wind_bounds_sampled ? Provenance::Sampled : Provenance::Formula;
  for (const char* k : {"c0", "c1", "c2", "c3"}) bs.provenance[k] = wind;
  for (const char* k : {"v_low", "v_high", "L_tilde", "L_low", "L_high", "R", "alpha0", "alpha1", "beta0", "beta1",
                        "beta2", "gamma0", "gamma1", "gamma2", "gamma3", "gamma4", "gamma5", "Gamma", "B_upper",
                        "beta_hat1", "beta_hat2", "B_hat"})
    bs.provenance[k] = Provenance::Formula;
  if (L_star > 0) bs.provenance["L_star"] = Provenance::Estimated;
  return bs;
}

double Gamma_of(const BoundSet& bs, double R) {
  const auto& g = bs.gamma;
  const double gap = bs.L_tilde - R;
  const double a = (stretch(bs.vbar, bs.c0) * bs.L_tilde + R) * g[0] + g[2] / 2.0;
  const double b = g[4] / gap + g[2] / 2.0;
  const double c = g[1] + g[3] / (2.0 * gap);
  const double d = g[3] / (2.0 * gap) + g[5] / (gap * gap);
  return std::max({a, b, c, d});
}

double B_upper_of(const BoundSet& bs, double R) {
  return bs.beta1 + std::max((stretch(bs.vbar, bs.c0) * bs.L_tilde + R) * bs.beta0, bs.beta2 / (bs.L_tilde + R));
}

double beta_hat2_of(const BoundSet& bs, double R) {
  const double v = bs.v_low, c0 = bs.c0, c1 = bs.c1, c2 = bs.c2, c3 = bs.c3;
  const double vb2 = bs.vbar * bs.vbar;
  // with a measured optimum length use it, otherwise the path-length sandwich
  const double lo = (bs.L_star > 0 ? bs.L_star : bs.L_low) - R;
  const double hi = (bs.L_star > 0 ? bs.L_star : bs.L_high) + R;
  if (!(lo > 0)) return std::numeric_limits<double>::infinity();
  const double inv = 3.0 / (v * lo) + 6.0 / std::pow(v * lo, 3) + 6.0 / std::pow(v * lo, 5);
  const double tail = inv * (bs.v_high * bs.v_high * hi + 2.0 * c0 * c1 * hi * hi);
  return 4.0 / std::pow(v, 12) *
         (20.0 + 10.0 * c1 + 7.0 * c2 + c3 + 10.0 * c0 * c1 + 36.0 * c0 * c1 * vb2 + 88.0 * c0 * c1 * vb2 * vb2 +
          20.0 * c0 * c2 + 8.0 * c0 * c3 + 20.0 * c1 * c1 + 24.0 * c1 * c2 + tail);
}

double kappa_of(double R, double c, const WindBounds& wb, double vbar, double L_tilde) {
  return kappa_formula(R, c, wb.c0, vbar, L_tilde);
}

double kappa_of(const BoundSet& bs, double R) { return kappa_formula(R, bs.c, bs.c0, bs.vbar, bs.L_tilde); }

double omega1_of(double B_lower, double kappa, double B_upper_plus_R) {
  return std::sqrt(2.0) * std::max({4.0 / B_lower, (1.0 + 4.0 * B_upper_plus_R / B_lower) / kappa,
                                    B_upper_plus_R / (kappa * kappa)});
}

double omega2_of(double B_hat, double R) { return (8.0 + B_hat) * R; }

namespace {

// empty string when R is admissible, otherwise the first failing condition
std::string failing_condition(const BoundSet& bs, double R) {
  const double B = bs.B_lower_est;
  if (!(R < B / (2.0 * Gamma_of(bs, R)))) return "B_lower/(2 Gamma)";
  if (!(R < B / 40.0)) return "B_lower/40";
  if (!(R < bs.L_tilde / 2.0)) return "L_tilde/2";
  if (!(R < bs.c)) return "c";
  const double kap = kappa_of(bs, R);
  const double bhat = std::max(bs.beta_hat1, beta_hat2_of(bs, R));
  if (!(omega1_of(B, kap, B_upper_of(bs, R) + R) * omega2_of(bhat, R) < 2.0)) return "omega";
  return "";
}

}  // namespace

OmegaReport omegas_and_radius(const BoundSet& bs) {
  OmegaReport rep;
  const double B = bs.B_lower_est;
  if (!(B > 0) || !(bs.c > 0)) {
    rep.binding = !(B > 0) ? "B_lower" : "c";
    return rep;
  }
  if (bs.R < bs.c) {
    const double kap = kappa_of(bs, bs.R);
    rep.omega1 = omega1_of(B, kap, B_upper_of(bs, bs.R) + bs.R);
    rep.omega2 = omega2_of(std::max(bs.beta_hat1, beta_hat2_of(bs, bs.R)), bs.R);
    rep.omega = rep.omega1 * rep.omega2;
  } else {
    rep.omega1 = rep.omega = std::numeric_limits<double>::infinity();
  }

  // every condition holds for small R; bisect for the last admissible radius
  double lo = 0.0, hi = std::min(bs.L_tilde / 2.0, bs.c);
  if (failing_condition(bs, hi).empty()) {
    lo = hi;
  } else {
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (failing_condition(bs, mid).empty() ? lo : hi) = mid;
    }
  }
  rep.R_C = lo;
  rep.binding = failing_condition(bs, hi);
  if (rep.binding.empty()) rep.binding = "none";
  rep.found = rep.R_C > 0;
  return rep;
}

namespace {

// P1 mass and stiffness on the interior nodes, coefficient layout of Direction
Mat z2_mass(int N) {
  const int n = Direction::size_for(N);
  Mat M = Mat::Zero(n, n);
  M(0, 0) = 1.0;
  const double h = 1.0 / double(N);
  for (int i = 1; i <= N - 1; ++i) {
    const int a = 1 + 2 * (i - 1);
    for (int c = 0; c < 2; ++c) {
      M(a + c, a + c) += 2.0 * h / 3.0 + 2.0 * double(N);
      if (i + 1 <= N - 1) {
        M(a + c, a + 2 + c) += h / 6.0 - double(N);
        M(a + 2 + c, a + c) += h / 6.0 - double(N);
      }
    }
  }
  return M;
}

Mat kernel_basis(const Mat& A) {
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double tol = double(std::max(A.rows(), A.cols())) * std::numeric_limits<double>::epsilon() *
                     (s.size() ? s(0) : 0.0);
  int rank = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > tol) ++rank;
  if (rank < A.rows()) throw Error(ErrorCode::RankDeficient, "constraint Jacobian is rank deficient");
  return svd.matrixV().rightCols(A.cols() - rank);
}

}  // namespace

double estimate_coercivity(const KKTIterate& chi, const WindField& field, double vbar, int Q) {
  const KKTSystem sys = assemble(chi, field, vbar, Q);
  const Mat Z = kernel_basis(sys.A);
  const Mat Hr = Z.transpose() * sys.H * Z;
  const Mat Mr = Z.transpose() * z2_mass(chi.z.N()) * Z;
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(0.5 * (Hr + Hr.transpose()), 0.5 * (Mr + Mr.transpose()),
                                                   Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double reduced_hessian_min_eig(const KKTIterate& chi, const WindField& field, double vbar, int Q) {
  const KKTSystem sys = assemble(chi, field, vbar, Q);
  const Mat Z = kernel_basis(sys.A);
  const Mat Hr = Z.transpose() * sys.H * Z;
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (Hr + Hr.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double constraint_pairing(const State& z, const Multiplier& lambda, const Direction& d) {
  if (lambda.N() != z.N() || d.N() != z.N()) throw Error(ErrorCode::ShapeMismatch, "constraint_pairing: sizes");
  return lambda.values.dot(constraint_d1(z, d)) / double(z.N());
}

namespace {

Vec progress(const State& z, const Vec2& u) {
  Vec b(z.N());
  for (int i = 0; i < z.N(); ++i) b(i) = z.path.velocity(i).dot(u);
  return b;
}

// nodes from interval velocities, δx_0 = 0 and δx_{i+1} = δx_i + v_i/N
Direction integrate_velocities(double dL, const std::vector<Vec2>& vel) {
  const int N = int(vel.size());
  Direction d(N);
  d.dL = dL;
  Vec2 x = Vec2::Zero();
  for (int i = 0; i + 1 < N; ++i) {
    x += vel[i] / double(N);
    d.dnodes[i] = x;
  }
  return d;
}

}  // namespace

InfSupWitness infsup_witness(const State& z, const Multiplier& lambda, const Vec2& u, double c, double R,
                             double kappa) {
  const int N = z.N();
  if (lambda.N() != N) throw Error(ErrorCode::ShapeMismatch, "infsup_witness: multiplier size");
  const Vec b = progress(z, u);
  for (int i = 0; i < N; ++i)
    if (!(b(i) >= c - R))
      throw Error(ErrorCode::DirectionCondition,
                  "infsup_witness: direction condition fails on interval " + std::to_string(i));
  const double mean = lambda.values.mean();
  const Vec lt = lambda.values.array() - mean;
  std::vector<Vec2> vel(N);
  for (int i = 0; i < N; ++i) vel[i] = 0.5 * lt(i) * u;
  const double dL = (b.cwiseProduct(lt).mean() - (c - R) * mean) / (2.0 * z.L);

  InfSupWitness w;
  w.d = integrate_velocities(dL, vel);
  w.pairing = constraint_pairing(z, lambda, w.d);
  const double denom = lambda.l2() * norm(w.d, NormKind::Z2);
  w.ratio = denom > 0 ? w.pairing / denom : 0.0;
  w.kappa = kappa;
  w.satisfied = denom == 0.0 ? true : w.ratio >= kappa;
  return w;
}

RegularityWitness regularity_witness(const State& z, const Vec& rhs, const Vec2& u, double c) {
  (void)c;
  const int N = z.N();
  if (rhs.size() != N) throw Error(ErrorCode::ShapeMismatch, "regularity_witness: rhs size");
  if (!(z.L > 0)) throw Error(ErrorCode::InvalidArgument, "regularity_witness: need L > 0");
  const Vec b = progress(z, u);
  for (int i = 0; i < N; ++i)
    if (!(b(i) > 0))
      throw Error(ErrorCode::DirectionCondition,
                  "regularity_witness: direction condition fails on interval " + std::to_string(i));
  const Vec binv = b.cwiseInverse();
  const double dL = -(binv.cwiseProduct(rhs).mean() / 2.0) / (z.L * binv.mean());
  std::vector<Vec2> vel(N);
  Vec2 closure = Vec2::Zero();
  for (int i = 0; i < N; ++i) {
    vel[i] = binv(i) * (rhs(i) / 2.0 + z.L * dL) * u;
    closure += vel[i];
  }
  RegularityWitness w;
  w.d = integrate_velocities(dL, vel);
  w.residual = (constraint_d1(z, w.d) - rhs).cwiseAbs().maxCoeff();
  w.closure = closure.norm();
  w.satisfied = w.residual <= 1e-10 * std::max(1.0, rhs.cwiseAbs().maxCoeff());
  return w;
}

void default_direction(const State& z_star, Vec2& u, double& c) {
  const Vec2 chord = z_star.path.x_D - z_star.path.x_O;
  if (chord.norm() == 0.0) throw Error(ErrorCode::CoincidentEndpoints, "default_direction: coincident endpoints");
  u = chord / chord.norm();
  c = progress(z_star, u).minCoeff();
}

long ViolationReport::total_violations(const std::vector<std::string>& names) const {
  long n = 0;
  for (const auto& c : checks)
    if (names.empty() || std::find(names.begin(), names.end(), c.name) != names.end()) n += c.violations;
  return n;
}

const ViolationCheck* ViolationReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

enum CheckId { kAlpha, kBeta, kGamma, kGammaT, kBUpper, kLzz, kGeneral, kCheckCount };
const char* const kCheckNames[kCheckCount] = {"alpha", "beta", "gamma", "Gamma", "B_upper", "Lzz", "general"};

struct Tally {
  std::array<ViolationCheck, kCheckCount> checks;
  long rejected = 0;

  void add(int id, double lhs, double bound) {
    auto& c = checks[id];
    ++c.samples;
    // tiny relative slack for rounding in the evaluation itself
    if (std::abs(lhs) > bound * (1.0 + 1e-10) + 1e-300) ++c.violations;
    if (bound > 0) c.max_ratio = std::max(c.max_ratio, std::abs(lhs) / bound);
  }
};

struct Sampler {
  std::mt19937_64 rng;
  std::normal_distribution<double> gauss{0.0, 1.0};
  std::uniform_real_distribution<double> unit{0.0, 1.0};

  explicit Sampler(std::uint64_t seed) : rng(seed) {}
  double u01() { return unit(rng); }
  double log_uniform(double lo, double hi) { return lo * std::pow(hi / lo, u01()); }
  Vec2 gauss2() { return Vec2(gauss(rng), gauss(rng)); }
};

std::uint64_t chunk_seed(std::uint64_t seed, int chunk) {
  // splitmix64 step
  std::uint64_t x = seed + 0x9E3779B97F4A7C15ull * std::uint64_t(chunk + 1);
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

bool degenerate(const Ellipse& e) { return e.semi_minor() <= 1e-12 * std::max(1.0, e.semi_major()); }

Vec2 point_in(const Ellipse& e, Sampler& s) {
  if (degenerate(e)) return e.focus_a + s.u01() * (e.focus_b - e.focus_a);
  Vec2 lo, hi;
  e.bounding_box(lo, hi);
  for (;;) {
    const Vec2 x(lo.x() + s.u01() * (hi.x() - lo.x()), lo.y() + s.u01() * (hi.y() - lo.y()));
    if (e.contains(x)) return x;
  }
}

// random interior displacement: either rough node noise or a few sine modes
Direction random_direction(int N, Sampler& s, const Vec2* axis) {
  Direction d(N);
  d.dL = s.gauss(s.rng);
  if (s.u01() < 0.5) {
    for (auto& p : d.dnodes) p = s.gauss2();
  } else {
    const int modes = 1 + int(s.u01() * 4.0);
    std::vector<std::pair<int, Vec2>> coef;
    for (int m = 0; m < modes; ++m) coef.emplace_back(1 + int(s.u01() * std::max(1, N / 2)), s.gauss2());
    for (int i = 1; i <= N - 1; ++i) {
      Vec2 p = Vec2::Zero();
      for (const auto& [k, a] : coef) p += a * std::sin(std::numbers::pi * k * double(i) / double(N));
      d.dnodes[i - 1] = p;
    }
  }
  if (axis)
    for (auto& p : d.dnodes) p = p.dot(*axis) * *axis;
  return d;
}

// Near-worst case for the third-derivative bound: a hat at node j across the
// track, paired with a ramp whose slope has one sign on both intervals the
// hat touches. Needs N >= 3.
void sharp_pair(const State& zs, Sampler& s, const Vec2* axis, Direction& hat, Direction& ramp) {
  const int N = zs.N();
  const int j = 1 + int(s.u01() * double(N - 2));
  const Vec2 along = zs.path.velocity(j).normalized();
  const Vec2 across = axis ? *axis : Vec2(-along.y(), along.x());
  hat = Direction(N);
  hat.dnodes[j - 1] = s.gauss(s.rng) * across;
  ramp = Direction(N);
  const int lo = j - 1, peak = j + 1;
  const double a = s.gauss(s.rng);
  for (int i = 1; i < N; ++i) {
    double v = 0.0;
    if (i > lo && i <= peak) v = a * double(i - lo) / double(peak - lo);
    if (i > peak) v = a * double(N - i) / double(N - peak);
    ramp.dnodes[i - 1] = v * (axis ? *axis : along);
  }
}

Direction scaled(const Direction& d, double s) {
  Direction o = d;
  o.dL *= s;
  for (auto& p : o.dnodes) p *= s;
  return o;
}

void kernel_sample(const BoundSet& bs, const WindField& field, const Ellipse& domain, Sampler& s, Tally& t) {
  const Vec2 x = point_in(domain, s);
  const double speed = s.log_uniform(1e-2, 1e2) * bs.L_tilde;
  const double ang = 2.0 * std::numbers::pi * s.u01();
  const Vec2 xt(speed * std::cos(ang), speed * std::sin(ang));
  const PointwiseKernel k = make_kernel(field, x, xt, bs.vbar, 3);
  const auto dir = [&]() {
    KernelDir d;
    d.dxi = s.log_uniform(1e-3, 1e3) * s.gauss2();
    d.dxi_tau = s.log_uniform(1e-3, 1e3) * s.gauss2();
    return d;
  };
  const KernelDir a = dir(), b = dir(), D = dir();
  const double nx = xt.norm();
  const double ax = a.dxi.norm(), axt = a.dxi_tau.norm();
  const double bx = b.dxi.norm(), bxt = b.dxi_tau.norm();
  const double Dx = D.dxi.norm(), Dxt = D.dxi_tau.norm();

  t.add(kAlpha, kernel_d1(k, a), bs.alpha0 * nx * ax + bs.alpha1 * axt);
  t.add(kBeta, kernel_d2(k, a, b), bs.beta0 * nx * ax * bx + bs.beta1 * (ax * bxt + axt * bx) + bs.beta2 / nx * axt * bxt);
  const auto& g = bs.gamma;
  const double gb = (g[0] * nx * ax * ax + g[2] * ax * axt + g[4] / nx * axt * axt) * Dx +
                    (g[1] * ax * ax + g[3] / nx * ax * axt + g[5] / (nx * nx) * axt * axt) * Dxt;
  t.add(kGamma, kernel_d3(k, a, D), gb);
}

void path_sample(const BoundSet& bs, double Gamma, const WindField& field, const KKTIterate& chi_star,
                 const Ellipse& domain, int Q, Sampler& s, Tally& t) {
  const State& zs = chi_star.z;
  const int N = zs.N();
  const double R = bs.R;
  const bool flat = degenerate(domain);
  const Vec2 axis = domain.axis();

  State z;
  Direction Dz, dz;
  bool sharp = false;
  Vec lam;
  for (int attempt = 0;; ++attempt) {
    if (attempt == 1000) return;  // give up on this sample
    const double radius = R * s.u01();
    const double share = s.u01();  // fraction of the radius spent on the multiplier
    Direction d;
    if (N >= 3 && s.u01() < 0.25) {
      sharp_pair(zs, s, flat ? &axis : nullptr, dz, d);
      sharp = true;
    } else {
      d = random_direction(N, s, flat ? &axis : nullptr);
      sharp = false;
    }
    if (flat) d.dL = 0.0;
    const double zn = norm(d, NormKind::Zinf);
    d = scaled(d, zn > 0 ? radius * (1.0 - share) / zn : 0.0);
    State cand = displaced(zs, d);
    bool inside = true;
    for (int i = 1; i < N && inside; ++i) inside = domain.contains(cand.path.node(i), 1e-9);
    if (!inside) {
      ++t.rejected;
      continue;
    }
    z = std::move(cand);
    Dz = d;
    lam = chi_star.lambda.values;
    for (int i = 0; i < N; ++i) lam(i) += radius * share * (2.0 * s.u01() - 1.0);
    break;
  }

  // general bounds around the optimum. The discrete λ* is small but not
  // zero, so the multiplier bound is taken relative to it.
  {
    const double Ls = zs.L;
    double vmin = std::numeric_limits<double>::infinity(), vmax = 0.0;
    for (int i = 0; i < N; ++i) {
      const double v = z.path.velocity(i).norm();
      vmin = std::min(vmin, v);
      vmax = std::max(vmax, v);
    }
    const double slack = 1e-12 * Ls;
    const bool ok = std::abs(z.L - Ls) <= R + slack && vmin >= Ls - R - slack - 1e-9 * Ls &&
                    vmax <= Ls + R + slack + 1e-9 * Ls &&
                    (lam - chi_star.lambda.values).cwiseAbs().maxCoeff() <= R + slack;
    t.add(kGeneral, ok ? 0.0 : 1.0, ok ? 1.0 : 0.0);
  }

  if (!sharp) {
    dz = random_direction(N, s, flat ? &axis : nullptr);
    if (s.u01() < 0.25) dz = Dz;  // also probe along the displacement itself
    if (s.u01() < 0.5) dz.dL = 0.0;
  }
  const NormParts dp = norm_parts(dz), Dp = norm_parts(Dz);
  const double l2sq = dp.pos_l2 * dp.pos_l2 + dp.vel_l2 * dp.vel_l2;
  const double z2 = norm(dz, NormKind::Z2);

  const double t3 = travel_time_d3(z, dz, Dz, field, bs.vbar, Q);
  t.add(kGammaT, t3, Gamma * l2sq * (Dp.pos_sup + Dp.vel_sup));

  const double t2 = travel_time_d2(z, dz, dz, field, bs.vbar, Q);
  t.add(kBUpper, t2, bs.B_upper * z2 * z2);

  double hterm = 0.0;
  for (int i = 0; i < N; ++i) hterm += lam(i) * (dz.velocity(i).squaredNorm() - dz.dL * dz.dL);
  hterm /= double(N);
  t.add(kLzz, t2 + hterm, (bs.B_upper + R) * z2 * z2);
}

}  // namespace

ViolationReport violation_search(const BoundSet& bs, const WindField& field, const KKTIterate& chi_star,
                                 const Ellipse& domain, long sample_budget, std::uint64_t seed,
                                 const ViolationOptions& opts) {
  const int chunks = std::max(1, opts.chunks);
  const double Gamma = bs.Gamma * opts.Gamma_scale;
  const long kernel_total = sample_budget / 2, path_total = sample_budget - kernel_total;
  std::vector<Tally> tallies(chunks);

  std::atomic<int> next{0};
  const auto work = [&]() {
    for (int c; (c = next.fetch_add(1)) < chunks;) {
      Sampler s(chunk_seed(seed, c));
      Tally& t = tallies[c];
      const long nk = kernel_total / chunks + (c < kernel_total % chunks ? 1 : 0);
      const long np = path_total / chunks + (c < path_total % chunks ? 1 : 0);
      for (long i = 0; i < nk; ++i) kernel_sample(bs, field, domain, s, t);
      for (long i = 0; i < np; ++i) path_sample(bs, Gamma, field, chi_star, domain, opts.Q, s, t);
    }
  };
  int workers = opts.workers > 0 ? opts.workers : int(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, chunks);
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  ViolationReport rep;
  for (int id = 0; id < kCheckCount; ++id) {
    ViolationCheck merged;
    merged.name = kCheckNames[id];
    for (const auto& t : tallies) {
      merged.samples += t.checks[id].samples;
      merged.violations += t.checks[id].violations;
      merged.max_ratio = std::max(merged.max_ratio, t.checks[id].max_ratio);
    }
    rep.checks.push_back(merged);
  }
  for (const auto& t : tallies) rep.rejected += t.rejected;
  return rep;
}

BoundSet analyze_optimum(const KKTIterate& chi_star, const WindField& field, double vbar, const WindBounds& wb,
                         int Q) {
  const State& z = chi_star.z;
  const double Lt = (z.path.x_D - z.path.x_O).norm();
  BoundSet bs = compute_constants(wb, vbar, Lt, 0.0, z.L);
  const double B = estimate_coercivity(chi_star, field, vbar, Q);

  // default radius: 0.99 of the smallest cap, where the Γ̄ cap shrinks with R
  double R = 0.0;
  if (B > 0) {
    const auto cap = [&](double r) { return 0.99 * std::min({B / (2.0 * Gamma_of(bs, r)), B / 40.0, Lt / 2.0}); };
    double lo = 0.0, hi = cap(0.0);
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (mid <= cap(mid) ? lo : hi) = mid;
    }
    R = lo;
  }
  BoundSet out = compute_constants(wb, vbar, Lt, R, z.L);
  out.B_lower_est = B;
  default_direction(z, out.u, out.c);
  out.kappa = R < out.c ? kappa_of(out, R) : 0.0;
  for (const char* k : {"B_lower_est", "c", "u", "kappa", "R"}) out.provenance[k] = Provenance::Estimated;
  return out;
}

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::Formula: return "formula";
    case Provenance::Estimated: return "estimated";
    case Provenance::Sampled: return "sampled";
  }
  return "?";
}

}  // namespace zermelo
