#pragma once

#include <array>
#include <stdexcept>
#include <vector>

#include "stls/structure.hpp"

namespace stls {

/// Linear index of entry `entry` (0..m-1) of block `block` (0..k) in x = (1 || v) (x) z.
constexpr int lifted_index(int block, int entry, int m) { return block * m + entry; }

/// Quadruple (l1, l2, l3, l4) encoding the 2x2 minor x_{l1} x_{l2} = x_{l3} x_{l4}.
using MinorIndex = std::array<int, 4>;

/// Lifted QCQP data in dimension N = (k+1) m.
///
/// Column i of `s_vectors` stacks column i of A_theta, B_1, ..., B_k so that
/// x^T s_i is entry i of z^T S_theta(v) when x = (1 || v) (x) z.
struct LiftedProblem {
  int m = 0;
  int n = 0;
  int k = 0;
  int N = 0;
  Matrix s_vectors;
  std::vector<MinorIndex> minor_set;
  Vector theta;
};

/// Minor index set for blocks 0..k of size m; ordered by (i1, i2, j1, j2).
inline std::vector<MinorIndex> enumerate_minors(int k, int m) {
  std::vector<MinorIndex> out;
  for (int i1 = 0; i1 <= k; ++i1) {
    for (int i2 = i1 + 1; i2 <= k; ++i2) {
      for (int j1 = 0; j1 < m; ++j1) {
        for (int j2 = j1 + 1; j2 < m; ++j2) {
          out.push_back({lifted_index(i1, j1, m), lifted_index(i2, j2, m), lifted_index(i1, j2, m),
                         lifted_index(i2, j1, m)});
        }
      }
    }
  }
  return out;
}

inline LiftedProblem build_lifted(const ProblemInstance& instance) {
  const auto& s = instance.structure;
  LiftedProblem p;
  p.m = s.rows();
  p.n = s.cols();
  p.k = s.num_params();
  p.N = (p.k + 1) * p.m;
  p.theta = instance.theta;
  p.s_vectors.resize(p.N, p.n);
  p.s_vectors.topRows(p.m) = s.evaluate(instance.theta);
  for (int j = 0; j < p.k; ++j) p.s_vectors.middleRows((j + 1) * p.m, p.m) = s.direction(j);
  p.minor_set = enumerate_minors(p.k, p.m);
  return p;
}

/// Orthogonal projection onto m-block symmetric matrices: symmetrize, then
/// symmetrize every m x m block.
inline Matrix block_sym(const Matrix& M, int m) {
  if (M.rows() != M.cols()) throw std::invalid_argument("block_sym: matrix must be square");
  if (m < 1 || M.rows() % m != 0) throw std::invalid_argument("block_sym: block size must divide N");
  const Matrix S = 0.5 * (M + M.transpose());
  Matrix out(S.rows(), S.cols());
  const auto blocks = S.rows() / m;
  for (Eigen::Index a = 0; a < blocks; ++a) {
    for (Eigen::Index b = 0; b < blocks; ++b) {
      const auto blk = S.block(a * m, b * m, m, m);
      out.block(a * m, b * m, m, m) = 0.5 * (blk + blk.transpose());
    }
  }
  return out;
}

/// Sym(s_i e_j^T), with i in [0, n) and j in [0, N).
inline Matrix constraint_matrix(const LiftedProblem& lifted, int i, int j) {
  if (i < 0 || i >= lifted.n || j < 0 || j >= lifted.N) {
    throw std::out_of_range("constraint_matrix: index out of range");
  }
  Matrix M = Matrix::Zero(lifted.N, lifted.N);
  M.col(j) = lifted.s_vectors.col(i);
  return block_sym(M, lifted.m);
}

struct QcqpResiduals {
  double h0 = 0.0;
  Matrix lifted;  ///< n x N, entry (i, j) = x^T Sym(s_i e_j^T) x
  Vector minors;  ///< one value per minor_set entry
};

inline QcqpResiduals qcqp_residuals(const LiftedProblem& lifted, const Vector& x) {
  if (x.size() != lifted.N) throw std::invalid_argument("qcqp_residuals: x has wrong length");
  QcqpResiduals r;
  r.h0 = x.head(lifted.m).squaredNorm() - 1.0;
  // x^T Sym(s e_j^T) x = s^T Sym(x x^T) e_j by self-adjointness of Sym.
  const Matrix xx = block_sym(x * x.transpose(), lifted.m);
  r.lifted = lifted.s_vectors.transpose() * xx;
  r.minors.resize(static_cast<Eigen::Index>(lifted.minor_set.size()));
  for (std::size_t l = 0; l < lifted.minor_set.size(); ++l) {
    const auto& q = lifted.minor_set[l];
    r.minors(static_cast<Eigen::Index>(l)) = x(q[0]) * x(q[1]) - x(q[2]) * x(q[3]);
  }
  return r;
}

/// x = (1 || v) (x) z.
inline Vector kronecker_lift(const Vector& v, const Vector& z) {
  const auto m = z.size();
  Vector x((v.size() + 1) * m);
  x.head(m) = z;
  for (Eigen::Index j = 0; j < v.size(); ++j) x.segment((j + 1) * m, m) = v(j) * z;
  return x;
}

}  // namespace stls
