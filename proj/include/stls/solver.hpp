#pragma once

// Dense primal-dual interior-point method (HKM direction, Mehrotra
// predictor-corrector) for standard-form SDPs, plus the face reduction used
// for lifted relaxations.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <vector>

#include "stls/sdp.hpp"

namespace stls {

namespace detail {

/// SDP restricted to X = Q Y Q^T. Constraint matrices stay in outer
/// coordinates; Q is empty for the unrestricted problem.
struct WorkingProblem {
  int outer = 0;
  Matrix basis;
  Matrix objective;
  std::vector<SparseSymmetric> constraints;
  Vector rhs;

  bool has_basis() const { return basis.size() > 0; }
  int dim() const { return has_basis() ? static_cast<int>(basis.cols()) : outer; }
  int num_constraints() const { return static_cast<int>(constraints.size()); }

  Matrix to_outer(const Matrix& K) const { return has_basis() ? Matrix(basis * K * basis.transpose()) : K; }
  Matrix to_inner(const Matrix& F) const { return has_basis() ? Matrix(basis.transpose() * F * basis) : F; }

  Vector apply(const Matrix& K) const {
    const Matrix G = to_outer(K);
    Vector out(num_constraints());
    for (int l = 0; l < num_constraints(); ++l) out(l) = constraints[static_cast<std::size_t>(l)].dot(G);
    return out;
  }

  Matrix adjoint(const Vector& y) const {
    Matrix F = Matrix::Zero(outer, outer);
    for (int l = 0; l < num_constraints(); ++l) {
      if (y(l) != 0.0) constraints[static_cast<std::size_t>(l)].add_to(F, y(l));
    }
    return to_inner(F);
  }

  /// M(l, m) = trace(A_l G A_m H) for symmetric outer-coordinate G, H.
  Matrix schur(const Matrix& G, const Matrix& H) const {
    const int mc = num_constraints();
    Matrix M(mc, mc);
    constexpr std::size_t kDenseThreshold = 48;
    Matrix P;
    for (int l = 0; l < mc; ++l) {
      const auto& Al = constraints[static_cast<std::size_t>(l)].entries;
      if (Al.size() > kDenseThreshold) {
        // P = H A_l G, then M(l, m) = sum_{(c,d)} A_m(c,d) P(d,c).
        Matrix AG = Matrix::Zero(outer, outer);
        for (const auto& e : Al) AG.row(e.row) += e.value * G.row(e.col);
        P.noalias() = H * AG;
        for (int m = l; m < mc; ++m) {
          double acc = 0.0;
          for (const auto& f : constraints[static_cast<std::size_t>(m)].entries) acc += f.value * P(f.col, f.row);
          M(l, m) = acc;
          M(m, l) = acc;
        }
        continue;
      }
      for (int m = l; m < mc; ++m) {
        const auto& Am = constraints[static_cast<std::size_t>(m)].entries;
        double acc = 0.0;
        if (Am.size() > kDenseThreshold) {
          // Fill from the other side when m is the dense one.
          Matrix AG = Matrix::Zero(outer, outer);
          for (const auto& e : Am) AG.row(e.row) += e.value * G.row(e.col);
          const Matrix Pm = H * AG;
          for (const auto& f : Al) acc += f.value * Pm(f.col, f.row);
        } else {
          for (const auto& e : Al) {
            for (const auto& f : Am) acc += e.value * f.value * G(e.col, f.row) * H(f.col, e.row);
          }
        }
        M(l, m) = acc;
        M(m, l) = acc;
      }
    }
    return M;
  }
};

/// In-place symmetrization (the naive expression aliases).
inline void symmetrize(Matrix& A) { A = (0.5 * (A + A.transpose())).eval(); }

/// Largest alpha with X + alpha dX psd (infinity if unbounded); X must be pd.
inline double max_step(const Eigen::LLT<Matrix>& chol, const Matrix& dX) {
  const auto& L = chol.matrixL();
  Matrix T = L.solve(dX);
  T = L.solve(T.transpose()).transpose();
  symmetrize(T);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(T, Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues()(0);
  if (lmin >= 0.0) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

/// Greedy pivoted Cholesky on the Gram matrix; returns indices of a maximal
/// independent subset. Index 0 is taken first when `keep_first` is set.
inline std::vector<int> independent_subset(const Matrix& gram, bool keep_first, double rel_tol = 1e-10) {
  const auto mc = gram.rows();
  std::vector<int> kept;
  if (mc == 0) return kept;
  const double dmax = std::max(gram.diagonal().maxCoeff(), 1e-300);
  {
    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() == Eigen::Success) {
      const double pivot = llt.matrixLLT().diagonal().cwiseAbs2().minCoeff();
      if (pivot > rel_tol * dmax) {
        kept.resize(static_cast<std::size_t>(mc));
        std::iota(kept.begin(), kept.end(), 0);
        return kept;
      }
    }
  }
  Vector diag = gram.diagonal();
  Matrix L(mc, 0);
  std::vector<char> used(static_cast<std::size_t>(mc), 0);
  for (Eigen::Index step = 0; step < mc; ++step) {
    Eigen::Index p = -1;
    if (step == 0 && keep_first) {
      p = 0;
    } else {
      double best = -1.0;
      for (Eigen::Index i = 0; i < mc; ++i) {
        if (!used[static_cast<std::size_t>(i)] && diag(i) > best) {
          best = diag(i);
          p = i;
        }
      }
    }
    if (p < 0 || diag(p) <= rel_tol * dmax) break;
    Vector col = gram.col(p);
    if (L.cols() > 0) col.noalias() -= L * L.row(p).transpose();
    col /= std::sqrt(diag(p));
    L.conservativeResize(Eigen::NoChange, L.cols() + 1);
    L.col(L.cols() - 1) = col;
    diag -= col.cwiseAbs2();
    used[static_cast<std::size_t>(p)] = 1;
    kept.push_back(static_cast<int>(p));
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

struct WorkingResult {
  Matrix Y;
  Vector y;
  Matrix Z;
  double primal_value = 0.0;
  double dual_value = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  SolveStatus status = SolveStatus::kNumericalFailure;
  int iterations = 0;
};

inline bool factor_schur(const Matrix& M, Eigen::LLT<Matrix>& llt) {
  llt.compute(M);
  if (llt.info() == Eigen::Success) return true;
  const double scale = std::max(M.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  for (double reg : {1e-14, 1e-12, 1e-10}) {
    Matrix Mr = M;
    Mr.diagonal().array() += reg * scale;
    llt.compute(Mr);
    if (llt.info() == Eigen::Success) return true;
  }
  return false;
}

inline WorkingResult solve_working(const WorkingProblem& wp, const SolverConfig& cfg) {
  const int d = wp.dim();
  const int mc = wp.num_constraints();
  WorkingResult res;
  if (d == 0 || mc == 0) {
    res.status = SolveStatus::kInfeasible;
    return res;
  }
  const Matrix& C = wp.objective;
  const Vector& b = wp.rhs;
  const double normC = C.norm();
  const double normb = b.norm();

  // Standard infeasible starting point scaled from the data.
  const Matrix P = wp.has_basis() ? Matrix(wp.basis * wp.basis.transpose()) : Matrix::Identity(d, d);
  double ratio = 0.0;
  double maxA = 0.0;
  for (int l = 0; l < mc; ++l) {
    const auto& e = wp.constraints[static_cast<std::size_t>(l)].entries;
    double nrm2 = 0.0;
    for (const auto& u : e) {
      for (const auto& v : e) nrm2 += u.value * v.value * P(u.col, v.row) * P(v.col, u.row);
    }
    const double nrm = std::sqrt(std::max(nrm2, 0.0));
    ratio = std::max(ratio, (1.0 + std::abs(b(l))) / (1.0 + nrm));
    maxA = std::max(maxA, nrm);
  }
  const double sd = std::sqrt(static_cast<double>(d));
  const double xi = std::max({10.0, sd, d * ratio});
  const double eta = std::max({10.0, sd, maxA, normC});
  Matrix Y = xi * Matrix::Identity(d, d);
  Matrix Z = eta * Matrix::Identity(d, d);
  Vector y = Vector::Zero(mc);

  const Matrix I = Matrix::Identity(d, d);
  double best_merit = std::numeric_limits<double>::infinity();
  WorkingResult best;
  int stall = 0;

  auto record = [&](int iter, double relp, double reld, double pobj, double dobj) {
    const double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    const double merit = std::max({relp, reld, gap});
    if (merit < best_merit) {
      best_merit = merit;
      best.Y = Y;
      best.y = y;
      best.Z = Z;
      best.primal_value = pobj;
      best.dual_value = dobj;
      best.primal_residual = relp;
      best.dual_residual = reld;
      best.iterations = iter;
    }
    return gap;
  };

  // Near-optimal iterates within kAccept times the tolerances count as
  // solved when progress stops; rounding limits the last digits.
  constexpr int kPatience = 4;
  constexpr double kAccept = 100.0;
  auto finish_status = [&] {
    if (best.primal_residual <= kAccept * cfg.feas_tol && best.dual_residual <= kAccept * cfg.feas_tol &&
        best_merit <= kAccept * std::max(cfg.feas_tol, cfg.gap_tol)) {
      return SolveStatus::kOptimal;
    }
    return best.primal_residual > 1e3 * cfg.feas_tol ? SolveStatus::kInfeasible : SolveStatus::kNumericalFailure;
  };

  for (int iter = 0; iter <= cfg.max_iter; ++iter) {
    const Vector rp = b - wp.apply(Y);
    const Matrix Rd = C - Z - wp.adjoint(y);
    const double relp = rp.norm() / (1.0 + normb);
    const double reld = Rd.norm() / (1.0 + normC);
    const double pobj = (C.cwiseProduct(Y)).sum();
    const double dobj = b.dot(y);
    const double gap = record(iter, relp, reld, pobj, dobj);
    if (cfg.verbose) {
      std::fprintf(stderr, "ipm %3d  p=% .10e  d=% .10e  relp=%.2e  reld=%.2e  gap=%.2e\n", iter, pobj, dobj, relp,
                   reld, gap);
    }
    if (relp <= cfg.feas_tol && reld <= cfg.feas_tol && gap <= cfg.gap_tol) {
      best.status = SolveStatus::kOptimal;
      best.Y = Y;
      best.y = y;
      best.Z = Z;
      best.primal_value = pobj;
      best.dual_value = dobj;
      best.primal_residual = relp;
      best.dual_residual = reld;
      best.iterations = iter;
      return best;
    }
    if (iter == cfg.max_iter) break;

    Eigen::LLT<Matrix> cholY(Y);
    Eigen::LLT<Matrix> cholZ(Z);
    if (cholY.info() != Eigen::Success || cholZ.info() != Eigen::Success) {
      best.status = SolveStatus::kNumericalFailure;
      return best;
    }
    const Matrix Zinv = cholZ.solve(I);
    const double mu = Y.cwiseProduct(Z).sum() / d;

    Eigen::LLT<Matrix> cholM;
    const Matrix schur = wp.schur(wp.to_outer(Y), wp.to_outer(Zinv));
    if (!factor_schur(schur, cholM)) {
      best.status = SolveStatus::kNumericalFailure;
      return best;
    }

    const Matrix YRdZinv = Y * Rd * Zinv;
    auto direction = [&](const Matrix& Rc, Matrix& dY, Vector& dy, Matrix& dZ) {
      const Vector rhs = rp - wp.apply(Rc - YRdZinv);
      dy = cholM.solve(rhs);
      // One step of iterative refinement; the Schur matrix loses accuracy near the optimum.
      dy += cholM.solve(rhs - schur * dy);
      dZ = Rd - wp.adjoint(dy);
      symmetrize(dZ);
      dY = Rc - Y * dZ * Zinv;
      symmetrize(dY);
    };

    Matrix dY, dZ;
    Vector dy;
    direction(-Y, dY, dy, dZ);
    const double ap_aff = std::min(1.0, max_step(cholY, dY));
    const double ad_aff = std::min(1.0, max_step(cholZ, dZ));
    const double mu_aff = (Y + ap_aff * dY).cwiseProduct(Z + ad_aff * dZ).sum() / d;
    double sigma = std::pow(std::max(mu_aff, 0.0) / mu, 3.0);
    sigma = std::clamp(sigma, 0.0, 1.0);

    const Matrix Rc = sigma * mu * Zinv - Y - dY * dZ * Zinv;
    direction(Rc, dY, dy, dZ);

    const double tau = 0.98;
    const double ap = std::min(1.0, tau * max_step(cholY, dY));
    const double ad = std::min(1.0, tau * max_step(cholZ, dZ));
    Y += ap * dY;
    Z += ad * dZ;
    y += ad * dy;
    symmetrize(Y);
    symmetrize(Z);

    // Lack of progress: tiny steps, or no improvement of the best merit.
    const bool tiny = std::max(ap, ad) < 1e-9;
    stall = (tiny || iter - best.iterations >= kPatience) ? stall + 1 : 0;
    if (stall >= 3 || iter - best.iterations >= kPatience) {
      best.status = finish_status();
      return best;
    }
  }
  best.status = finish_status();
  if (best.status == SolveStatus::kNumericalFailure) best.status = SolveStatus::kMaxIter;
  return best;
}

/// Gram matrix of the constraints restricted to the working face.
inline Matrix constraint_gram(const WorkingProblem& wp) {
  const Matrix P = wp.has_basis() ? Matrix(wp.basis * wp.basis.transpose()) : Matrix::Identity(wp.outer, wp.outer);
  return wp.schur(P, P);
}

/// Drops dependent constraints, solves, and scatters multipliers back.
inline WorkingResult solve_pruned(WorkingProblem wp, const SolverConfig& cfg) {
  if (!cfg.prune_dependent || wp.num_constraints() == 0) return solve_working(wp, cfg);
  const auto kept = independent_subset(constraint_gram(wp), true);
  const int full = wp.num_constraints();
  if (static_cast<int>(kept.size()) == full) return solve_working(wp, cfg);
  WorkingProblem reduced;
  reduced.outer = wp.outer;
  reduced.basis = std::move(wp.basis);
  reduced.objective = std::move(wp.objective);
  reduced.rhs.resize(static_cast<Eigen::Index>(kept.size()));
  for (std::size_t t = 0; t < kept.size(); ++t) {
    reduced.constraints.push_back(std::move(wp.constraints[static_cast<std::size_t>(kept[t])]));
    reduced.rhs(static_cast<Eigen::Index>(t)) = wp.rhs(kept[t]);
  }
  auto res = solve_working(reduced, cfg);
  Vector y = Vector::Zero(full);
  if (res.y.size() == static_cast<Eigen::Index>(kept.size())) {
    for (std::size_t t = 0; t < kept.size(); ++t) y(kept[t]) = res.y(static_cast<Eigen::Index>(t));
  }
  res.y = std::move(y);
  return res;
}

/// Sum of multiplier-weighted block-symmetry constraint matrices.
inline Matrix minor_combination(const LiftedLayout& L, const Vector& y) {
  Matrix S = Matrix::Zero(L.N, L.N);
  for (std::size_t t = 0; t < L.minor_set.size(); ++t) {
    const double s = y(L.minor_offset() + static_cast<Eigen::Index>(t));
    if (s == 0.0) continue;
    const auto& q = L.minor_set[t];
    S(q[0], q[1]) += 0.5 * s;
    S(q[1], q[0]) += 0.5 * s;
    S(q[2], q[3]) -= 0.5 * s;
    S(q[3], q[2]) -= 0.5 * s;
  }
  return S;
}

inline void fill_lifted_duals(const LiftedLayout& L, SdpSolution& sol) {
  const auto& y = sol.multipliers;
  sol.gamma = y(0);
  sol.mu.resize(L.n, L.N);
  for (int i = 0; i < L.n; ++i) {
    for (int j = 0; j < L.N; ++j) sol.mu(i, j) = y(L.lifted_offset() + i * L.N + j);
  }
  sol.Sigma = minor_combination(L, y);
}

inline SdpSolution solve_generic(const SdpProblem& problem, const SolverConfig& cfg) {
  WorkingProblem wp;
  wp.outer = problem.dim();
  wp.objective = problem.objective();
  wp.rhs = problem.rhs();
  wp.constraints.reserve(static_cast<std::size_t>(problem.num_constraints()));
  for (int i = 0; i < problem.num_constraints(); ++i) wp.constraints.push_back(problem.constraint(i));
  auto res = solve_pruned(std::move(wp), cfg);
  SdpSolution sol;
  sol.X = res.Y;
  sol.multipliers = res.y;
  sol.slack = res.Z;
  sol.primal_value = res.primal_value;
  sol.dual_value = res.dual_value;
  sol.primal_residual = res.primal_residual;
  sol.dual_residual = res.dual_residual;
  sol.status = res.status;
  sol.iterations = res.iterations;
  if (problem.lifted() && sol.multipliers.size() == problem.num_constraints()) fill_lifted_duals(*problem.lifted(), sol);
  return sol;
}

/// Lifted relaxation solved on the face X = Q Y Q^T, range(Q) = range(S)^perp.
///
/// On that face the lifted constraints hold identically, so only the trace
/// and block-symmetry constraints remain. Their multipliers (gamma, sigma)
/// give M = C - gamma T - sum sigma_l E_l with Q^T M Q psd; the lifted
/// multipliers mu are then chosen so that the full slack is block diagonal
/// diag(Q^T M Q, I) in the basis (Q, P).
inline SdpSolution solve_lifted_reduced(const SdpProblem& problem, const SolverConfig& cfg) {
  const auto& L = *problem.lifted();
  const Matrix& S = L.s_vectors;
  Eigen::JacobiSVD<Matrix> svd(S, Eigen::ComputeFullU);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > 1e-12 * std::max(1.0, smax) * std::max(L.N, L.n)) ++r;
  }
  const Matrix U = svd.matrixU();
  const Matrix Q = U.rightCols(L.N - r);
  const Matrix Pr = U.leftCols(r);

  WorkingProblem wp;
  wp.outer = L.N;
  wp.basis = Q;
  wp.objective = Q.transpose() * problem.objective() * Q;
  wp.constraints.push_back(problem.constraint(0));
  for (const auto& q : L.minor_set) wp.constraints.push_back(minor_constraint_sparse(q));
  wp.rhs = Vector::Zero(wp.num_constraints());
  wp.rhs(0) = 1.0;
  auto res = solve_pruned(std::move(wp), cfg);

  SdpSolution sol;
  sol.status = res.status;
  sol.iterations = res.iterations;
  sol.primal_residual = res.primal_residual;
  sol.dual_residual = res.dual_residual;
  if (res.Y.size() == 0) {
    sol.X = Matrix::Zero(L.N, L.N);
    sol.multipliers = Vector::Zero(problem.num_constraints());
    sol.gamma = 0.0;
    sol.mu = Matrix::Zero(L.n, L.N);
    sol.Sigma = Matrix::Zero(L.N, L.N);
    sol.slack = problem.objective();
    return sol;
  }
  sol.X = Q * res.Y * Q.transpose();
  symmetrize(sol.X);

  const double gamma = res.y(0);
  Vector full_y = Vector::Zero(problem.num_constraints());
  full_y(0) = gamma;
  for (std::size_t t = 0; t < L.minor_set.size(); ++t) {
    full_y(L.minor_offset() + static_cast<Eigen::Index>(t)) = res.y(1 + static_cast<Eigen::Index>(t));
  }
  const Matrix sigma_bs = minor_combination(L, full_y);
  Matrix M = problem.objective() - sigma_bs;
  M.topLeftCorner(L.m, L.m).diagonal().array() -= gamma;

  // sym(S mu) = Pr K^T + K Pr^T cancels the (Q, Pr) and (Pr, Pr) blocks of M.
  const Matrix B = Q.transpose() * M * Pr;
  const Matrix D = Pr.transpose() * M * Pr;
  constexpr double kTail = 1.0;
  const Matrix K = Q * B + 0.5 * Pr * (D - kTail * Matrix::Identity(r, r));
  const Matrix R = Pr.transpose() * S;  // r x n, full row rank
  const Matrix mu = 2.0 * R.completeOrthogonalDecomposition().pseudoInverse() * K.transpose();
  const Matrix SU = S * mu;
  const Matrix symSU = 0.5 * (SU + SU.transpose());
  const Matrix sigma_full = sigma_bs + (symSU - block_sym(SU, L.m));

  for (int i = 0; i < L.n; ++i) {
    for (int j = 0; j < L.N; ++j) full_y(L.lifted_offset() + i * L.N + j) = mu(i, j);
  }
  for (std::size_t t = 0; t < L.minor_set.size(); ++t) {
    const auto& q = L.minor_set[t];
    full_y(L.minor_offset() + static_cast<Eigen::Index>(t)) = 2.0 * sigma_full(q[0], q[1]);
  }
  sol.multipliers = std::move(full_y);
  sol.gamma = gamma;
  sol.mu = mu;
  sol.Sigma = sigma_full;
  sol.slack = M - symSU;
  symmetrize(sol.slack);
  sol.primal_value = problem.objective().cwiseProduct(sol.X).sum();
  sol.dual_value = gamma;
  return sol;
}

}  // namespace detail

/// Solves the SDP. Deterministic: identical inputs give bit-identical output.
inline SdpSolution solve(const SdpProblem& problem, const SolverConfig& config = {}) {
  config.validate();
  if (config.solver_kind == SolverKind::kExternal) return config.external(problem);
  if (problem.lifted() && config.reduce_kernel) return detail::solve_lifted_reduced(problem, config);
  return detail::solve_generic(problem, config);
}

}  // namespace stls
