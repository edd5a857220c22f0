#include "zermelo/kkt_solver.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <lapacke.h>

namespace zermelo {

Mat KKTSystem::saddle_matrix() const {
  const int nz = int(H.rows()), nl = int(A.rows());
  Mat K = Mat::Zero(nz + nl, nz + nl);
  K.topLeftCorner(nz, nz) = H;
  K.topRightCorner(nz, nl) = A.transpose();
  K.bottomLeftCorner(nl, nz) = A;
  return K;
}

Vec KKTSystem::rhs() const {
  Vec b(rhs_z.size() + rhs_lambda.size());
  b << rhs_z, rhs_lambda;
  return b;
}

KKTSystem assemble(const KKTIterate& chi, const WindField& field, double vbar, int Q, double speed_floor) {
  const State& z = chi.z;
  const int N = z.path.N;
  if (chi.lambda.N() != N) throw Error(ErrorCode::ShapeMismatch, "assemble: multiplier size");
  for (int i = 0; i < N; ++i)
    if (!(z.path.velocity(i).norm() >= speed_floor) || z.path.velocity(i).norm() == 0.0)
      throw Error(ErrorCode::SpeedBelowFloor, "assemble: speed below floor on interval " + std::to_string(i));

  KKTSystem sys;
  sys.H = travel_time_hessian(z, field, vbar, Q);
  // λ-weighted constraint curvature; h_i'' only couples the two nodes of interval i
  const double N2 = 2.0 * double(N) * double(N);
  for (int i = 0; i < N; ++i) {
    const double l = chi.lambda.values(i);
    sys.H(0, 0) += -2.0 * l;
    const int a = i >= 1 ? 1 + 2 * (i - 1) : -1;
    const int b = i + 1 <= N - 1 ? 1 + 2 * i : -1;
    for (int c = 0; c < 2; ++c) {
      if (a >= 0) sys.H(a + c, a + c) += N2 * l;
      if (b >= 0) sys.H(b + c, b + c) += N2 * l;
      if (a >= 0 && b >= 0) {
        sys.H(a + c, b + c) -= N2 * l;
        sys.H(b + c, a + c) -= N2 * l;
      }
    }
  }
  sys.A = constraint_jacobian(z);
  const Residual r = lagrangian_grad(chi, field, vbar, Q);
  sys.rhs_z = -r.grad_z;
  sys.rhs_lambda = -r.grad_lambda;
  return sys;
}

NewtonStep newton_step(const KKTSystem& sys) {
  const Mat K = sys.saddle_matrix();
  const Vec b = sys.rhs();
  const lapack_int n = lapack_int(K.rows());
  Mat LD = K;
  std::vector<lapack_int> ipiv(n);
  lapack_int info = LAPACKE_dsytrf(LAPACK_COL_MAJOR, 'U', n, LD.data(), n, ipiv.data());
  if (info > 0) throw Error(ErrorCode::Singular, "newton_step: saddle matrix is singular");
  if (info < 0) throw Error(ErrorCode::InvalidArgument, "newton_step: dsytrf argument error");

  const double anorm = K.cwiseAbs().colwise().sum().maxCoeff();
  double rcond = 0.0;
  info = LAPACKE_dsycon(LAPACK_COL_MAJOR, 'U', n, LD.data(), n, ipiv.data(), anorm, &rcond);
  if (info != 0 || rcond < double(n) * std::numeric_limits<double>::epsilon())
    throw Error(ErrorCode::Singular, "newton_step: saddle matrix is numerically singular (rcond " +
                                         std::to_string(rcond) + ")");

  const auto backsolve = [&](const Vec& r) {
    Vec x = r;
    LAPACKE_dsytrs(LAPACK_COL_MAJOR, 'U', n, 1, LD.data(), n, ipiv.data(), x.data(), n);
    return x;
  };
  Vec x = backsolve(b);
  const double bn = b.norm();
  // a couple of refinement sweeps if the direct solve is not accurate enough
  for (int sweep = 0; sweep < 2 && (K * x - b).norm() > 1e-10 * bn; ++sweep) x += backsolve(b - K * x);
  if ((K * x - b).norm() > 1e-10 * bn)
    throw Error(ErrorCode::Singular, "newton_step: linear residual above tolerance");

  const int nz = int(sys.H.rows());
  NewtonStep s;
  s.dz = Direction::from_coefficients(x.head(nz));
  s.dlambda = Multiplier(Vec(x.tail(K.rows() - nz)));
  return s;
}

namespace {

KKTIterate apply_step(const KKTIterate& chi, const NewtonStep& s, double mu) {
  KKTIterate out;
  out.z = displaced(chi.z, s.dz, mu);
  out.lambda = Multiplier(Vec(chi.lambda.values + mu * s.dlambda.values));
  return out;
}

double y2_distance(const KKTIterate& a, const KKTIterate& b) {
  return norm(difference(a.z, b.z), Multiplier(Vec(a.lambda.values - b.lambda.values)), NormKind::Y2);
}

double residual_or_inf(const KKTIterate& chi, const WindField& field, double vbar, int Q) {
  try {
    const double r = lagrangian_grad(chi, field, vbar, Q).norm();
    return std::isfinite(r) ? r : std::numeric_limits<double>::infinity();
  } catch (const Error&) {
    return std::numeric_limits<double>::infinity();
  }
}

IterateRecord record_of(int k, const KKTIterate& chi, double res, const WindField& field, double vbar, int Q) {
  IterateRecord r;
  r.iter = k;
  r.residual = res;
  r.T = travel_time(chi.z, field, vbar, Q);
  r.feasibility = constraint(chi.z).cwiseAbs().maxCoeff();
  return r;
}

}  // namespace

SolveReport solve(const KKTIterate& chi0, const WindField& field, double vbar, const SolveOptions& opts) {
  if (chi0.z.path.N < 2) throw Error(ErrorCode::InvalidArgument, "solve: need N >= 2");
  if (chi0.lambda.N() != chi0.z.path.N) throw Error(ErrorCode::ShapeMismatch, "solve: multiplier size");
  const double Lt = (chi0.z.path.x_D - chi0.z.path.x_O).norm();
  const double tol_abs = opts.tol_abs > 0 ? opts.tol_abs : 1e-10 * Lt / vbar;
  const double floor = opts.speed_floor > 0 ? opts.speed_floor : 1e-6 * Lt;
  const int Q = opts.quadrature;

  SolveReport rep;
  KKTIterate chi = chi0;
  double res = residual_or_inf(chi, field, vbar, Q);
  if (!std::isfinite(res)) {
    rep.status = SolveStatus::InvalidIterate;
    rep.message = "start iterate cannot be evaluated";
    rep.final = rep.reference = chi;
    return rep;
  }
  rep.tol = tol_abs + opts.tol_rel * res;
  std::vector<KKTIterate> history{chi};
  rep.iterates.push_back(record_of(0, chi, res, field, vbar, Q));

  bool failed = false;
  for (int k = 0; k < opts.max_iter && res > rep.tol; ++k) {
    NewtonStep step;
    try {
      step = newton_step(assemble(chi, field, vbar, Q, floor));
    } catch (const Error& e) {
      rep.status = e.code() == ErrorCode::Singular ? SolveStatus::Singular : SolveStatus::InvalidIterate;
      rep.message = e.what();
      failed = true;
      break;
    }
    double mu = 1.0;
    KKTIterate trial = apply_step(chi, step, mu);
    double rt = residual_or_inf(trial, field, vbar, Q);
    if (opts.damping == Damping::ArmijoHalving) {
      while (!(rt < res) && !(rt <= rep.tol)) {
        mu *= 0.5;
        if (mu < std::ldexp(1.0, -20)) break;
        trial = apply_step(chi, step, mu);
        rt = residual_or_inf(trial, field, vbar, Q);
      }
      if (mu < std::ldexp(1.0, -20)) {
        rep.status = SolveStatus::InfeasibleKernel;
        rep.message = "no residual decrease down to mu = 2^-20";
        failed = true;
        break;
      }
    } else if (!std::isfinite(rt)) {
      rep.status = SolveStatus::InvalidIterate;
      rep.message = "full Newton step leaves the admissible region";
      failed = true;
      break;
    }
    IterateRecord r = record_of(k + 1, trial, rt, field, vbar, Q);
    r.step_norm = norm(step.dz, step.dlambda, NormKind::Y2) * mu;
    r.mu = mu;
    rep.iterates.push_back(r);
    history.push_back(trial);
    chi = trial;
    res = rt;
  }
  if (!failed) rep.status = res <= rep.tol ? SolveStatus::Converged : SolveStatus::MaxIter;
  rep.final = chi;

  // Polish a reference iterate for the distance columns.
  KKTIterate ref = chi;
  if (rep.status == SolveStatus::Converged) {
    double rr = res;
    for (int extra = 0; extra < 5 && rr > rep.tol / 100.0; ++extra) {
      try {
        const NewtonStep s = newton_step(assemble(ref, field, vbar, Q, floor));
        const KKTIterate cand = apply_step(ref, s, 1.0);
        const double rc = residual_or_inf(cand, field, vbar, Q);
        if (!(rc < rr)) break;
        ref = cand;
        rr = rc;
      } catch (const Error&) {
        break;
      }
    }
  }
  rep.reference = ref;
  for (std::size_t k = 0; k < history.size(); ++k) rep.iterates[k].dist_to_final = y2_distance(history[k], ref);
  return rep;
}

ContractionDiagnostics contraction_diagnostics(const SolveReport& report) {
  if (report.status != SolveStatus::Converged)
    throw Error(ErrorCode::InvalidArgument, "contraction_diagnostics: run did not converge");
  if (report.iterates.size() < 3)
    throw Error(ErrorCode::TooFewIterates, "contraction_diagnostics: need at least 3 iterates");
  ContractionDiagnostics d;
  for (std::size_t k = 0; k + 1 < report.iterates.size(); ++k) {
    const double e0 = report.iterates[k].dist_to_final, e1 = report.iterates[k + 1].dist_to_final;
    if (e0 == 0.0) break;
    d.ratios.push_back(e1 / e0);
    d.quadratic.push_back(e1 / (e0 * e0));
  }
  return d;
}

std::string iterates_csv(const SolveReport& report) {
  std::ostringstream os;
  os << "iter,residual,step_norm,mu,T,feasibility\n";
  char buf[256];
  for (const auto& r : report.iterates) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.iter, r.residual, r.step_norm, r.mu, r.T,
                  r.feasibility);
    os << buf;
  }
  return os.str();
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIter: return "max_iter";
    case SolveStatus::Singular: return "singular";
    case SolveStatus::InfeasibleKernel: return "infeasible-kernel";
    case SolveStatus::InvalidIterate: return "invalid-iterate";
  }
  return "?";
}

const char* to_string(Damping d) { return d == Damping::None ? "none" : "armijo-halving"; }

}  // namespace zermelo
