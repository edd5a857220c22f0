#pragma once

#include <string>
#include <utility>
#include <vector>

#include "zermelo/functional.hpp"

namespace zermelo {

struct KKTSystem {
  Mat H;  // T'' + Σ λ_i h_i''
  Mat A;  // constraint Jacobian, N x n_z
  Vec rhs_z;
  Vec rhs_lambda;

  Mat saddle_matrix() const;
  Vec rhs() const;
};

KKTSystem assemble(const KKTIterate& chi, const WindField& field, double vbar, int Q = 4,
                   double speed_floor = 0.0);

struct NewtonStep {
  Direction dz;
  Multiplier dlambda;
};

// Bunch–Kaufman factorization of the saddle matrix. Throws Singular.
NewtonStep newton_step(const KKTSystem& sys);

enum class Damping { None, ArmijoHalving };

struct SolveOptions {
  // non-positive values mean "derive from the problem": tol_abs = 1e-10 L̃/v̄,
  // speed_floor = 1e-6 L̃
  double tol_abs = -1.0;
  double tol_rel = 1e-12;
  int max_iter = 50;
  Damping damping = Damping::None;
  double speed_floor = -1.0;
  int quadrature = 4;
};

enum class SolveStatus { Converged, MaxIter, Singular, InfeasibleKernel, InvalidIterate };

struct IterateRecord {
  int iter = 0;
  double residual = 0;
  double dist_to_final = 0;  // Y2 distance to the reference iterate
  double step_norm = 0;      // Y2 norm of the applied step
  double mu = 0;             // damping factor of the step that produced this iterate
  double T = 0;
  double feasibility = 0;    // ‖h‖∞
};

struct SolveReport {
  std::vector<IterateRecord> iterates;  // entry 0 is the start
  SolveStatus status = SolveStatus::MaxIter;
  KKTIterate final;
  // the final iterate polished to a 100x tighter tolerance; distances in
  // `iterates` are measured against it
  KKTIterate reference;
  double tol = 0;
  std::string message;

  int iterations() const { return iterates.empty() ? 0 : int(iterates.size()) - 1; }
};

SolveReport solve(const KKTIterate& chi0, const WindField& field, double vbar, const SolveOptions& opts = {});

struct ContractionDiagnostics {
  std::vector<double> ratios;     // ‖e_{k+1}‖ / ‖e_k‖
  std::vector<double> quadratic;  // ‖e_{k+1}‖ / ‖e_k‖²
};

// Needs a converged report with at least 3 recorded iterates.
ContractionDiagnostics contraction_diagnostics(const SolveReport& report);

std::string iterates_csv(const SolveReport& report);
const char* to_string(SolveStatus s);
const char* to_string(Damping d);

}  // namespace zermelo
