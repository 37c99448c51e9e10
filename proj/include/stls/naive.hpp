#pragma once

// Shor relaxation of the kernel representation in the variables
// w = (1, z, v) of dimension 1 + m + k. Its value is zero for every theta,
// which is why the lifted relaxation is needed.

#include "stls/solver.hpp"
#include "stls/structure.hpp"

namespace stls {

/// Standard-form SDP of the naive relaxation:
///   min trace(W X_vv)  s.t.  X_00 = 1,  trace(X_zz) = 1,
///   sum_p X_0,z_p A_theta(p,i) + sum_{j,p} X_v_j,z_p B_j(p,i) = 0  for each column i.
inline SdpProblem naive_relaxation(const ProblemInstance& instance) {
  const auto& s = instance.structure;
  const int m = s.rows();
  const int n = s.cols();
  const int k = s.num_params();
  const int dim = 1 + m + k;
  const int zoff = 1;
  const int voff = 1 + m;

  Matrix C = Matrix::Zero(dim, dim);
  C.bottomRightCorner(k, k) = instance.weight.matrix();

  std::vector<SparseSymmetric> cons;
  cons.push_back(SparseSymmetric{{{0, 0, 1.0}}});
  SparseSymmetric tr;
  for (int p = 0; p < m; ++p) tr.entries.push_back({zoff + p, zoff + p, 1.0});
  cons.push_back(std::move(tr));

  const Matrix A = s.evaluate(instance.theta);
  for (int i = 0; i < n; ++i) {
    std::vector<SymEntry> raw;
    auto push = [&](int r, int c, double v) {
      if (v == 0.0) return;
      raw.push_back({r, c, 0.5 * v});
      raw.push_back({c, r, 0.5 * v});
    };
    for (int p = 0; p < m; ++p) push(0, zoff + p, A(p, i));
    for (int j = 0; j < k; ++j) {
      for (int p = 0; p < m; ++p) push(voff + j, zoff + p, s.direction(j)(p, i));
    }
    cons.push_back(detail::canonicalize(std::move(raw)));
  }
  Vector b = Vector::Zero(static_cast<Eigen::Index>(cons.size()));
  b(0) = 1.0;
  b(1) = 1.0;
  return SdpProblem(std::move(C), std::move(cons), std::move(b));
}

/// The feasible point diag(1, I_m / m, 0) of the naive relaxation; objective 0.
inline Matrix naive_witness(const ProblemInstance& instance) {
  const int m = instance.m();
  const int dim = 1 + m + instance.k();
  Matrix X = Matrix::Zero(dim, dim);
  X(0, 0) = 1.0;
  X.block(1, 1, m, m) = Matrix::Identity(m, m) / m;
  return X;
}

/// Optimal value of the naive relaxation.
inline double naive_relaxation_value(const ProblemInstance& instance, const SolverConfig& config = {}) {
  const auto sol = solve(naive_relaxation(instance), config);
  if (sol.status != SolveStatus::kOptimal) {
    throw std::runtime_error(std::string("naive_relaxation_value: solver returned ") + to_string(sol.status));
  }
  return sol.primal_value;
}

}  // namespace stls
