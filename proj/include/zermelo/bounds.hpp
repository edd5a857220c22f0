#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "zermelo/functional.hpp"
#include "zermelo/kkt_solver.hpp"
#include "zermelo/windfield.hpp"

namespace zermelo {

enum class Provenance { Formula, Estimated, Sampled };

struct BoundSet {
  // inputs
  double c0 = 0, c1 = 0, c2 = 0, c3 = 0;
  double vbar = 1, v_low = 1, v_high = 1;  // v̲ = √(v̄² − c̄₀²), v̿ = √(v̄² + c̄₀²)
  bool wind_bounds_sampled = false;
  bool derivative_bounds_valid = true;  // c̄₀ < v̄/√5

  double L_tilde = 1, L_low = 1, L_high = 1;
  double L_star = 0;  // 0 when no optimum is known yet
  double R = 0;

  double alpha0 = 0, alpha1 = 0;
  double beta0 = 0, beta1 = 0, beta2 = 0;
  std::array<double, 6> gamma{};
  double Gamma = 0;    // T''' bound constant at R
  double B_upper = 0;  // T'' bound constant at R
  double beta_hat1 = 0, beta_hat2 = 0, B_hat = 0;

  double B_lower_est = 0;  // coercivity estimate (not a formula)
  double c = 0;            // inf-sup direction constant
  Vec2 u = Vec2(1, 0);
  double kappa = 0;  // κ(R)

  std::map<std::string, Provenance> provenance;
};

// Every formula evaluated at radius R. Throws InvalidArgument if R >= L̃.
BoundSet compute_constants(const WindBounds& wb, double vbar, double L_tilde, double R, double L_star = 0.0);

// individual R-dependent pieces
double Gamma_of(const BoundSet& bs, double R);
double B_upper_of(const BoundSet& bs, double R);
double beta_hat2_of(const BoundSet& bs, double R);
double kappa_of(double R, double c, const WindBounds& wb, double vbar, double L_tilde);
double kappa_of(const BoundSet& bs, double R);

struct OmegaReport {
  double omega1 = 0, omega2 = 0, omega = 0;  // evaluated at bs.R
  double R_C = 0;
  std::string binding;  // which condition stops R_C from growing
  bool found = false;
};

double omega1_of(double B_lower, double kappa, double B_upper_plus_R);
double omega2_of(double B_hat, double R);
OmegaReport omegas_and_radius(const BoundSet& bs);

// Smallest eigenvalue of the reduced Hessian relative to the squared Z2 mass
// on ker h'(z*).
double estimate_coercivity(const KKTIterate& chi, const WindField& field, double vbar, int Q = 4);
// the same, without the mass scaling
double reduced_hessian_min_eig(const KKTIterate& chi, const WindField& field, double vbar, int Q = 4);

// ⟨λ, h'(z)[δz]⟩ with the L² pairing on ]0,1[
double constraint_pairing(const State& z, const Multiplier& lambda, const Direction& d);

struct InfSupWitness {
  Direction d;
  double pairing = 0;
  double ratio = 0;  // pairing / (‖λ‖_{L²} ‖δz‖_{Z2})
  double kappa = 0;
  bool satisfied = false;
};
InfSupWitness infsup_witness(const State& z, const Multiplier& lambda, const Vec2& u, double c, double R,
                             double kappa);

struct RegularityWitness {
  Direction d;
  double residual = 0;    // max_i |h'(z)[δz]_i − rhs_i|
  double closure = 0;     // ‖Σ δξ_τ,i‖
  bool satisfied = false;
};
RegularityWitness regularity_witness(const State& z, const Vec& rhs, const Vec2& u, double c);

// default inf-sup direction and constant at an optimum
void default_direction(const State& z_star, Vec2& u, double& c);

struct ViolationCheck {
  std::string name;
  long samples = 0;
  long violations = 0;
  double max_ratio = 0;  // max |lhs| / bound
};

struct ViolationReport {
  std::vector<ViolationCheck> checks;
  long rejected = 0;  // samples outside Ω that were redrawn
  long total_violations(const std::vector<std::string>& names) const;
  const ViolationCheck* find(const std::string& name) const;
};

struct ViolationOptions {
  double Gamma_scale = 1.0;  // < 1 corrupts Γ̄ for the falsification control
  int workers = 0;           // 0 = hardware concurrency
  int chunks = 16;           // fixed partition so results do not depend on workers
  int Q = 4;
};

ViolationReport violation_search(const BoundSet& bs, const WindField& field, const KKTIterate& chi_star,
                                 const Ellipse& domain, long sample_budget, std::uint64_t seed,
                                 const ViolationOptions& opts = {});

// Convenience: constants at an optimum with the default R, u, c and B̲ estimate.
BoundSet analyze_optimum(const KKTIterate& chi_star, const WindField& field, double vbar, const WindBounds& wb,
                         int Q = 4);

const char* to_string(Provenance p);

}  // namespace zermelo
