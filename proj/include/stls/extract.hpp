#pragma once

#include <algorithm>
#include <cmath>

#include "stls/baseline.hpp"
#include "stls/certificate.hpp"
#include "stls/lift.hpp"
#include "stls/solver.hpp"
#include "stls/structure.hpp"

namespace stls {

/// Thresholds for declaring the relaxation exact.
struct ExactnessThresholds {
  double rank_one_ratio = 1e-5;
  double relative_gap = 1e-6;
  double rank_deficiency = 1e-6;
  double certificate_tol = 1e-6;
  /// Local iterations used to polish a rank-one extraction; 0 disables.
  int polish_iterations = 50;
};

struct StlsSolution {
  Vector u_star;
  double objective = 0.0;
  double rank_one_ratio = 1.0;
  double gamma = 0.0;
  double certificate_gap = 0.0;  ///< |objective - gamma|
  double rank_deficiency_residual = 1.0;
  bool certificate_valid = false;
  /// The dual bound matches the objective of a feasible u_star.
  bool certified = false;
  /// rank_one_ratio is below threshold.
  bool rank_one = false;
  SolveStatus status = SolveStatus::kNumericalFailure;

  /// Certified with a rank-one SDP solution: the relaxation is tight.
  bool exact() const { return certified && rank_one; }
};

/// lambda_2 / lambda_1 of a symmetric matrix; 1 when lambda_1 <= 0.
inline double rank_one_ratio(const Matrix& X) {
  if (X.rows() != X.cols()) throw std::invalid_argument("rank_one_ratio: matrix must be square");
  if (X.rows() == 1) return X(0, 0) > 0.0 ? 0.0 : 1.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (X + X.transpose()), Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  const double l1 = ev(ev.size() - 1);
  if (l1 <= 0.0) return 1.0;
  return std::clamp(ev(ev.size() - 2) / l1, 0.0, 1.0);
}

/// sigma_min / sigma_max; zero for the zero matrix.
inline double rank_deficiency_residual(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(M);
  const auto& s = svd.singularValues();
  const double smax = s(0);
  if (smax <= 0.0) return 0.0;
  // Fewer singular values than rows means a nontrivial left kernel.
  if (s.size() < M.rows()) return 0.0;
  return s(s.size() - 1) / smax;
}

inline bool is_rank_deficient(const Matrix& M, double rel_tol = 1e-8) { return rank_deficiency_residual(M) <= rel_tol; }

/// x = sqrt(lambda_1) times the top eigenvector, with the largest-magnitude
/// entry of its z-part positive.
inline Vector top_factor(const Matrix& X, int m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (X + X.transpose()));
  const auto n = X.rows();
  const double l1 = std::max(eig.eigenvalues()(n - 1), 0.0);
  Vector x = std::sqrt(l1) * eig.eigenvectors().col(n - 1);
  Eigen::Index imax = 0;
  x.head(m).cwiseAbs().maxCoeff(&imax);
  if (x(imax) < 0.0) x = -x;
  return x;
}

/// Inverse of the lift on Kronecker vectors: v_j = <y_j, z> / ||z||^2.
inline Vector recover_v(const Vector& x, int m) {
  const Vector z = x.head(m);
  const double zz = z.squaredNorm();
  const auto k = x.size() / m - 1;
  Vector v(k);
  for (Eigen::Index j = 0; j < k; ++j) v(j) = zz > 0.0 ? x.segment((j + 1) * m, m).dot(z) / zz : 0.0;
  return v;
}

/// Builds the report for a solved relaxation.
inline StlsSolution extract_solution(const SdpSolution& sdp, const LiftedProblem& lifted,
                                     const ProblemInstance& instance, const ExactnessThresholds& thr = {}) {
  StlsSolution out;
  out.status = sdp.status;
  const Vector x = top_factor(sdp.X, lifted.m);
  out.u_star = recover_v(x, lifted.m) + instance.theta;
  out.objective = instance.weight.norm_squared(out.u_star - instance.theta);
  out.rank_one_ratio = rank_one_ratio(sdp.X);
  out.rank_one = out.rank_one_ratio <= thr.rank_one_ratio;
  if (out.rank_one && thr.polish_iterations > 0 && x.head(lifted.m).norm() > 0.0) {
    // The interior-point solution is accurate to about sqrt(tolerance) in u;
    // a few local steps from the extracted kernel vector recover full accuracy.
    LocalConfig cfg;
    cfg.init_kind = InitKind::kUserSupplied;
    cfg.z0 = x.head(lifted.m);
    cfg.max_iter = thr.polish_iterations;
    const auto loc = local_solve(instance, cfg);
    const bool feasible = rank_deficiency_residual(instance.structure.evaluate(loc.u)) <=
                          rank_deficiency_residual(instance.structure.evaluate(out.u_star));
    if (feasible && loc.objective <= out.objective) {
      out.u_star = loc.u;
      out.objective = loc.objective;
    }
  }
  out.rank_deficiency_residual = rank_deficiency_residual(instance.structure.evaluate(out.u_star));
  out.gamma = sdp.gamma;
  out.certificate_gap = std::abs(out.objective - sdp.gamma);
  if (sdp.mu.size() > 0 && sdp.Sigma.size() > 0) {
    const auto check = verify_certificate(lifted, instance.weight, {sdp.gamma, sdp.mu, sdp.Sigma}, thr.certificate_tol);
    out.certificate_valid = check.valid;
  }
  out.certified = out.certificate_valid && out.status == SolveStatus::kOptimal &&
                  out.certificate_gap <= thr.relative_gap * (1.0 + std::abs(out.gamma)) &&
                  out.rank_deficiency_residual <= thr.rank_deficiency;
  return out;
}

/// Lift, assemble, solve, extract.
inline StlsSolution solve_stls(const ProblemInstance& instance, const SolverConfig& config = {},
                               const ExactnessThresholds& thr = {}) {
  const auto lifted = build_lifted(instance);
  const auto problem = assemble_primal(lifted, instance.weight);
  const auto sdp = solve(problem, config);
  return extract_solution(sdp, lifted, instance, thr);
}

}  // namespace stls
