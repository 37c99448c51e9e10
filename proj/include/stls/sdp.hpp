#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "stls/lift.hpp"
#include "stls/structure.hpp"

namespace stls {

struct SymEntry {
  int row;
  int col;
  double value;
};

/// Symmetric matrix stored as a list of entries covering both triangles.
struct SparseSymmetric {
  std::vector<SymEntry> entries;

  static SparseSymmetric from_dense(const Matrix& A, double drop_tol = 0.0) {
    SparseSymmetric s;
    for (Eigen::Index c = 0; c < A.cols(); ++c) {
      for (Eigen::Index r = 0; r < A.rows(); ++r) {
        if (std::abs(A(r, c)) > drop_tol) {
          s.entries.push_back({static_cast<int>(r), static_cast<int>(c), A(r, c)});
        }
      }
    }
    return s;
  }

  Matrix to_dense(int dim) const {
    Matrix A = Matrix::Zero(dim, dim);
    add_to(A, 1.0);
    return A;
  }

  void add_to(Matrix& A, double scale) const {
    for (const auto& e : entries) A(e.row, e.col) += scale * e.value;
  }

  /// Trace inner product with X.
  double dot(const Matrix& X) const {
    double acc = 0.0;
    for (const auto& e : entries) acc += e.value * X(e.row, e.col);
    return acc;
  }

  std::size_t nnz() const { return entries.size(); }
};

namespace detail {

/// Sum duplicate coordinates and drop exact zeros.
inline SparseSymmetric canonicalize(std::vector<SymEntry> raw) {
  std::sort(raw.begin(), raw.end(), [](const SymEntry& a, const SymEntry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  SparseSymmetric out;
  for (const auto& e : raw) {
    if (!out.entries.empty() && out.entries.back().row == e.row && out.entries.back().col == e.col) {
      out.entries.back().value += e.value;
    } else {
      out.entries.push_back(e);
    }
  }
  std::erase_if(out.entries, [](const SymEntry& e) { return e.value == 0.0; });
  return out;
}

}  // namespace detail

/// Sparse form of Sym(s e_j^T) for block size m.
inline SparseSymmetric lifted_constraint_sparse(const Vector& s, int j, int m) {
  std::vector<SymEntry> raw;
  raw.reserve(static_cast<std::size_t>(4 * s.size()));
  auto push = [&](int r, int c, double v) {
    raw.push_back({r, c, 0.5 * v});
    // Same entry after transposing its m x m block in place.
    const int a = r / m, p = r % m, b = c / m, q = c % m;
    raw.push_back({a * m + q, b * m + p, 0.5 * v});
  };
  for (Eigen::Index r = 0; r < s.size(); ++r) {
    if (s(r) == 0.0) continue;
    push(static_cast<int>(r), j, 0.5 * s(r));
    push(j, static_cast<int>(r), 0.5 * s(r));
  }
  return detail::canonicalize(std::move(raw));
}

/// sym(E_{l1 l2} - E_{l3 l4}): the constraint X(l1,l2) = X(l3,l4).
inline SparseSymmetric minor_constraint_sparse(const MinorIndex& q) {
  return detail::canonicalize({{q[0], q[1], 0.5}, {q[1], q[0], 0.5}, {q[2], q[3], -0.5}, {q[3], q[2], -0.5}});
}

/// trace(X_zz) as a constraint matrix.
inline SparseSymmetric trace_constraint_sparse(int m) {
  SparseSymmetric s;
  for (int p = 0; p < m; ++p) s.entries.push_back({p, p, 1.0});
  return s;
}

/// Layout of a lifted relaxation inside an SdpProblem: constraint 0 is the
/// trace constraint, then n*N lifted constraints (index 1 + i*N + j), then one
/// block-symmetry constraint per minor.
struct LiftedLayout {
  int m = 0;
  int n = 0;
  int k = 0;
  int N = 0;
  Matrix s_vectors;
  std::vector<MinorIndex> minor_set;

  int lifted_offset() const { return 1; }
  int minor_offset() const { return 1 + n * N; }
  int num_constraints() const { return 1 + n * N + static_cast<int>(minor_set.size()); }
};

/// Standard-form SDP: min C.X  s.t.  A_i.X = b_i,  X psd.
class SdpProblem {
 public:
  /// Generic problem with explicit constraint matrices.
  SdpProblem(Matrix objective, std::vector<SparseSymmetric> constraints, Vector rhs)
      : objective_(std::move(objective)), explicit_(std::move(constraints)), rhs_(std::move(rhs)) {
    if (objective_.rows() != objective_.cols()) throw std::invalid_argument("SdpProblem: objective must be square");
    if (static_cast<Eigen::Index>(explicit_.size()) != rhs_.size()) {
      throw std::invalid_argument("SdpProblem: constraint/rhs count mismatch");
    }
    for (const auto& c : explicit_) {
      for (const auto& e : c.entries) {
        if (e.row < 0 || e.col < 0 || e.row >= dim() || e.col >= dim()) {
          throw std::invalid_argument("SdpProblem: constraint entry out of range");
        }
      }
    }
  }

  /// Lifted relaxation; lifted constraint matrices are materialized only when
  /// N <= materialize_limit and computed on demand otherwise.
  SdpProblem(Matrix objective, LiftedLayout layout, int materialize_limit = 200)
      : objective_(std::move(objective)), layout_(std::move(layout)) {
    const auto& L = *layout_;
    rhs_ = Vector::Zero(L.num_constraints());
    rhs_(0) = 1.0;
    materialized_ = L.N <= materialize_limit;
    explicit_.push_back(trace_constraint_sparse(L.m));
    if (materialized_) {
      for (int i = 0; i < L.n; ++i) {
        for (int j = 0; j < L.N; ++j) explicit_.push_back(lifted_constraint_sparse(L.s_vectors.col(i), j, L.m));
      }
    }
    for (const auto& q : L.minor_set) explicit_.push_back(minor_constraint_sparse(q));
  }

  int dim() const { return static_cast<int>(objective_.rows()); }
  int num_constraints() const { return static_cast<int>(rhs_.size()); }
  const Matrix& objective() const { return objective_; }
  const Vector& rhs() const { return rhs_; }
  const std::optional<LiftedLayout>& lifted() const { return layout_; }
  bool materialized() const { return !layout_ || materialized_; }

  SparseSymmetric constraint(int idx) const {
    if (idx < 0 || idx >= num_constraints()) throw std::out_of_range("SdpProblem: constraint index");
    if (!layout_ || materialized_) return explicit_[static_cast<std::size_t>(idx)];
    const auto& L = *layout_;
    if (idx == 0) return explicit_[0];
    if (idx < L.minor_offset()) {
      const int t = idx - L.lifted_offset();
      return lifted_constraint_sparse(L.s_vectors.col(t / L.N), t % L.N, L.m);
    }
    return explicit_[static_cast<std::size_t>(1 + idx - L.minor_offset())];
  }

 private:
  Matrix objective_;
  std::vector<SparseSymmetric> explicit_;
  Vector rhs_;
  std::optional<LiftedLayout> layout_;
  bool materialized_ = true;
};

/// diag(0_m, W (x) I_m).
inline Matrix lifted_objective(const WeightSpec& weight, int m) {
  const int k = weight.dim();
  const int N = (k + 1) * m;
  Matrix C = Matrix::Zero(N, N);
  const Matrix W = weight.matrix();
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      if (W(a, b) == 0.0) continue;
      for (int p = 0; p < m; ++p) C((a + 1) * m + p, (b + 1) * m + p) = W(a, b);
    }
  }
  return C;
}

/// Lifted relaxation: min (W (x) I).X_yy s.t. trace(X_zz) = 1,
/// Sym(s_i e_j^T).X = 0, X block symmetric, X psd.
inline SdpProblem assemble_primal(const LiftedProblem& lifted, const WeightSpec& weight) {
  if (weight.dim() != lifted.k) throw std::invalid_argument("assemble_primal: weight dimension mismatch");
  LiftedLayout layout{lifted.m, lifted.n, lifted.k, lifted.N, lifted.s_vectors, lifted.minor_set};
  return SdpProblem(lifted_objective(weight, lifted.m), std::move(layout));
}

enum class SolverKind { kInternal, kExternal };

enum class SolveStatus { kOptimal, kMaxIter, kInfeasible, kNumericalFailure };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal:
      return "optimal";
    case SolveStatus::kMaxIter:
      return "max_iter";
    case SolveStatus::kInfeasible:
      return "infeasible";
    case SolveStatus::kNumericalFailure:
      return "numerical_failure";
  }
  return "unknown";
}

struct SdpSolution {
  Matrix X;
  Vector multipliers;  ///< one per constraint, in problem order
  Matrix slack;        ///< C - sum_i multipliers_i A_i as returned by the solver
  // Lifted problems only.
  double gamma = 0.0;
  Matrix mu;     ///< n x N
  Matrix Sigma;  ///< N x N, block skew-symmetric
  double primal_value = 0.0;
  double dual_value = 0.0;
  double primal_residual = 0.0;  ///< relative
  double dual_residual = 0.0;    ///< relative
  SolveStatus status = SolveStatus::kNumericalFailure;
  int iterations = 0;
};

/// Callback for plugging an external conic solver.
using ExternalSolver = std::function<SdpSolution(const SdpProblem&)>;

struct SolverConfig {
  double feas_tol = 1e-8;
  double gap_tol = 1e-8;
  int max_iter = 200;
  SolverKind solver_kind = SolverKind::kInternal;
  ExternalSolver external;
  /// Restrict lifted problems to the face {X : X S = 0} before solving.
  bool reduce_kernel = true;
  /// Drop linearly dependent equality constraints before solving.
  bool prune_dependent = true;
  bool verbose = false;

  void validate() const {
    if (!(feas_tol > 0.0) || !(gap_tol > 0.0)) throw std::invalid_argument("SolverConfig: tolerances must be positive");
    if (max_iter < 1) throw std::invalid_argument("SolverConfig: max_iter must be positive");
    if (solver_kind == SolverKind::kExternal && !external) {
      throw std::invalid_argument("SolverConfig: external solver selected but no callback given");
    }
  }
};

/// Writes the problem as text: '#' comment lines, then "N M", then the M
/// right-hand sides, then one line "index row col value" per upper-triangular
/// nonzero (1-based; index 0 is the objective).
inline void export_sparse(const SdpProblem& problem, std::ostream& os) {
  os << "# min C.X s.t. A_i.X = b_i, X psd; index 0 = C\n";
  os << problem.dim() << ' ' << problem.num_constraints() << '\n';
  for (int i = 0; i < problem.num_constraints(); ++i) os << (i ? " " : "") << problem.rhs()(i);
  os << '\n';
  os.precision(17);
  const auto& C = problem.objective();
  for (int c = 0; c < problem.dim(); ++c) {
    for (int r = 0; r <= c; ++r) {
      if (C(r, c) != 0.0) os << 0 << ' ' << r + 1 << ' ' << c + 1 << ' ' << C(r, c) << '\n';
    }
  }
  for (int i = 0; i < problem.num_constraints(); ++i) {
    for (const auto& e : problem.constraint(i).entries) {
      if (e.row <= e.col) os << i + 1 << ' ' << e.row + 1 << ' ' << e.col + 1 << ' ' << e.value << '\n';
    }
  }
}

}  // namespace stls
