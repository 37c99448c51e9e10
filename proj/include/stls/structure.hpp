#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace stls {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Affine map u -> base + sum_j u_j * directions[j] into m x n matrices, m <= n.
class AffineStructure {
 public:
  AffineStructure() = default;

  AffineStructure(Matrix base, std::vector<Matrix> directions)
      : base_(std::move(base)), directions_(std::move(directions)) {
    if (base_.rows() < 1 || base_.cols() < 1) {
      throw std::invalid_argument("AffineStructure: empty base matrix");
    }
    if (base_.rows() > base_.cols()) {
      throw std::invalid_argument("AffineStructure: requires m <= n, got " +
                                  std::to_string(base_.rows()) + "x" +
                                  std::to_string(base_.cols()));
    }
    if (directions_.empty()) {
      throw std::invalid_argument("AffineStructure: needs at least one direction");
    }
    for (const auto& d : directions_) {
      if (d.rows() != base_.rows() || d.cols() != base_.cols()) {
        throw std::invalid_argument("AffineStructure: direction shape mismatch");
      }
    }
  }

  int rows() const { return static_cast<int>(base_.rows()); }
  int cols() const { return static_cast<int>(base_.cols()); }
  int num_params() const { return static_cast<int>(directions_.size()); }

  const Matrix& base() const { return base_; }
  const std::vector<Matrix>& directions() const { return directions_; }
  const Matrix& direction(int j) const { return directions_.at(static_cast<std::size_t>(j)); }

  Matrix evaluate(const Vector& u) const {
    if (u.size() != num_params()) {
      throw std::invalid_argument("evaluate: parameter vector has length " +
                                  std::to_string(u.size()) + ", expected " +
                                  std::to_string(num_params()));
    }
    Matrix out = base_;
    for (int j = 0; j < num_params(); ++j) {
      if (u(j) != 0.0) out += u(j) * directions_[static_cast<std::size_t>(j)];
    }
    return out;
  }

 private:
  Matrix base_;
  std::vector<Matrix> directions_;
};

inline Matrix evaluate(const AffineStructure& s, const Vector& u) { return s.evaluate(u); }

/// Weight defining the (semi)norm ||v||_W^2 = v^T W v on the parameter space.
class WeightSpec {
 public:
  enum class Kind { kIdentity, kDense, kMask };

  static WeightSpec identity(int k) {
    if (k < 1) throw std::invalid_argument("WeightSpec: dimension must be positive");
    WeightSpec w;
    w.kind_ = Kind::kIdentity;
    w.dim_ = k;
    return w;
  }

  static WeightSpec dense(Matrix W) {
    if (W.rows() != W.cols() || W.rows() < 1) {
      throw std::invalid_argument("WeightSpec: dense weight must be square");
    }
    const double scale = std::max(1.0, W.cwiseAbs().maxCoeff());
    if ((W - W.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
      throw std::invalid_argument("WeightSpec: dense weight is not symmetric");
    }
    Matrix sym = 0.5 * (W + W.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-10) {
      throw std::invalid_argument("WeightSpec: dense weight is not positive semidefinite");
    }
    WeightSpec w;
    w.kind_ = Kind::kDense;
    w.dim_ = static_cast<int>(sym.rows());
    w.matrix_ = std::move(sym);
    return w;
  }

  /// Missing-data weight: observed[i] = 1 keeps theta_i, 0 marks it missing.
  static WeightSpec mask(const Vector& observed) {
    if (observed.size() < 1) throw std::invalid_argument("WeightSpec: empty mask");
    for (Eigen::Index i = 0; i < observed.size(); ++i) {
      if (observed(i) != 0.0 && observed(i) != 1.0) {
        throw std::invalid_argument("WeightSpec: mask entries must be 0 or 1");
      }
    }
    WeightSpec w;
    w.kind_ = Kind::kMask;
    w.dim_ = static_cast<int>(observed.size());
    w.matrix_ = observed;
    return w;
  }

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }

  /// Dense k x k representation.
  Matrix matrix() const {
    switch (kind_) {
      case Kind::kIdentity:
        return Matrix::Identity(dim_, dim_);
      case Kind::kDense:
        return matrix_;
      case Kind::kMask:
        return matrix_.col(0).asDiagonal();
    }
    return {};
  }

  /// Mask vector (all ones unless kind is kMask).
  Vector observed() const {
    if (kind_ == Kind::kMask) return matrix_.col(0);
    return Vector::Ones(dim_);
  }

  bool is_definite() const {
    switch (kind_) {
      case Kind::kIdentity:
        return true;
      case Kind::kMask:
        return matrix_.col(0).minCoeff() > 0.5;
      case Kind::kDense: {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(matrix_, Eigen::EigenvaluesOnly);
        return eig.eigenvalues().minCoeff() > 1e-12 * std::max(1.0, eig.eigenvalues().maxCoeff());
      }
    }
    return false;
  }

  double norm_squared(const Vector& v) const {
    if (v.size() != dim_) throw std::invalid_argument("WeightSpec: dimension mismatch");
    switch (kind_) {
      case Kind::kIdentity:
        return v.squaredNorm();
      case Kind::kMask:
        return v.cwiseProduct(matrix_.col(0)).dot(v);
      case Kind::kDense:
        return v.dot(matrix_ * v);
    }
    return 0.0;
  }

 private:
  Kind kind_ = Kind::kIdentity;
  int dim_ = 0;
  Matrix matrix_;
};

/// A data point theta together with the structure and the weight.
struct ProblemInstance {
  AffineStructure structure;
  Vector theta;
  WeightSpec weight;

  ProblemInstance(AffineStructure s, Vector t)
      : ProblemInstance(s, std::move(t), WeightSpec::identity(s.num_params())) {}

  ProblemInstance(AffineStructure s, Vector t, WeightSpec w)
      : structure(std::move(s)), theta(std::move(t)), weight(std::move(w)) {
    if (theta.size() != structure.num_params()) {
      throw std::invalid_argument("ProblemInstance: theta has length " +
                                  std::to_string(theta.size()) + ", structure expects " +
                                  std::to_string(structure.num_params()));
    }
    if (weight.dim() != structure.num_params()) {
      throw std::invalid_argument("ProblemInstance: weight dimension mismatch");
    }
  }

  int m() const { return structure.rows(); }
  int n() const { return structure.cols(); }
  int k() const { return structure.num_params(); }
};

// ---------------------------------------------------------------------------
// Builders

/// m x n Hankel matrix, entry (i,j) = u_{i+j} (0-based), k = m+n-1.
inline AffineStructure hankel_structure(int m, int n) {
  if (m < 2) throw std::invalid_argument("hankel_structure: m must be at least 2");
  if (m > n) throw std::invalid_argument("hankel_structure: requires m <= n");
  const int k = m + n - 1;
  std::vector<Matrix> dirs(static_cast<std::size_t>(k), Matrix::Zero(m, n));
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) dirs[static_cast<std::size_t>(i + j)](i, j) = 1.0;
  }
  return AffineStructure(Matrix::Zero(m, n), std::move(dirs));
}

/// Degree-d Sylvester structure for polynomials of degrees n1 and n2.
///
/// Parameters are the coefficients of f (n1+1 values, highest degree first)
/// followed by those of g (n2+1 values). Rows 0..n2-d hold shifted copies of
/// f and the remaining n1-d+1 rows hold shifted copies of g, so the matrix is
/// (k-2d) x (k-d-1) with k = n1+n2+2. It is rank deficient iff
/// deg gcd(f, g) >= d.
inline AffineStructure sylvester_structure(int n1, int n2, int d) {
  if (n1 < 1 || n2 < 1) throw std::invalid_argument("sylvester_structure: degrees must be positive");
  if (d < 1 || d > std::min(n1, n2)) {
    throw std::invalid_argument("sylvester_structure: d must lie in [1, min(n1, n2)]");
  }
  const int k = n1 + n2 + 2;
  const int rows = k - 2 * d;
  const int cols = k - d - 1;
  if (rows > cols) throw std::invalid_argument("sylvester_structure: resulting matrix has m > n");
  std::vector<Matrix> dirs(static_cast<std::size_t>(k), Matrix::Zero(rows, cols));
  const int f_rows = n2 - d + 1;
  for (int r = 0; r < f_rows; ++r) {
    for (int c = 0; c <= n1; ++c) dirs[static_cast<std::size_t>(c)](r, r + c) = 1.0;
  }
  const int g_rows = n1 - d + 1;
  for (int r = 0; r < g_rows; ++r) {
    for (int c = 0; c <= n2; ++c) {
      dirs[static_cast<std::size_t>(n1 + 1 + c)](f_rows + r, r + c) = 1.0;
    }
  }
  return AffineStructure(Matrix::Zero(rows, cols), std::move(dirs));
}

/// Cleared-denominator form of u_i = a_i^T z / b_i^T z: column i is u_i b_i - a_i.
inline AffineStructure fractional_structure(const std::vector<Vector>& a, const std::vector<Vector>& b) {
  if (a.size() != b.size() || a.empty()) {
    throw std::invalid_argument("fractional_structure: a and b must be non-empty and of equal length");
  }
  const int k = static_cast<int>(a.size());
  const int m = static_cast<int>(a.front().size());
  if (m < 1) throw std::invalid_argument("fractional_structure: empty vectors");
  if (k < m) throw std::invalid_argument("fractional_structure: needs k >= m");
  Matrix base = Matrix::Zero(m, k);
  std::vector<Matrix> dirs(static_cast<std::size_t>(k), Matrix::Zero(m, k));
  for (int i = 0; i < k; ++i) {
    const auto& ai = a[static_cast<std::size_t>(i)];
    const auto& bi = b[static_cast<std::size_t>(i)];
    if (ai.size() != m || bi.size() != m) {
      throw std::invalid_argument("fractional_structure: vector length mismatch");
    }
    base.col(i) = -ai;
    dirs[static_cast<std::size_t>(i)].col(i) = bi;
  }
  return AffineStructure(std::move(base), std::move(dirs));
}

/// Image of homogeneous point x = (1, x1, x2, x3) under a 3x4 camera:
/// (row1.x / row0.x, row2.x / row0.x).
inline Eigen::Vector2d project(const Matrix& camera, const Eigen::Vector4d& x) {
  const Eigen::Vector3d y = camera * x;
  return {y(1) / y(0), y(2) / y(0)};
}

/// Triangulation: unknown point z = x in R^4, parameters are the 2l image coordinates.
inline AffineStructure triangulation_structure(const std::vector<Matrix>& cameras) {
  if (cameras.size() < 2) throw std::invalid_argument("triangulation_structure: needs at least 2 cameras");
  std::vector<Vector> a;
  std::vector<Vector> b;
  for (const auto& P : cameras) {
    if (P.rows() != 3 || P.cols() != 4) throw std::invalid_argument("triangulation_structure: cameras must be 3x4");
    a.emplace_back(P.row(1).transpose());
    b.emplace_back(P.row(0).transpose());
    a.emplace_back(P.row(2).transpose());
    b.emplace_back(P.row(0).transpose());
  }
  return fractional_structure(a, b);
}

/// Resectioning: unknown camera z = row-major vec(P) in R^12, parameters are the 2l image coordinates.
inline AffineStructure resectioning_structure(const std::vector<Eigen::Vector4d>& points) {
  if (points.size() < 6) throw std::invalid_argument("resectioning_structure: needs at least 6 points");
  std::vector<Vector> a;
  std::vector<Vector> b;
  auto row_block = [](int r, const Eigen::Vector4d& x) {
    Vector v = Vector::Zero(12);
    v.segment<4>(4 * r) = x;
    return v;
  };
  for (const auto& x : points) {
    a.push_back(row_block(1, x));
    b.push_back(row_block(0, x));
    a.push_back(row_block(2, x));
    b.push_back(row_block(0, x));
  }
  return fractional_structure(a, b);
}

/// Row-major vectorization of a 3x4 camera, matching resectioning_structure.
inline Vector camera_to_vec(const Matrix& P) {
  Vector z(12);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) z(4 * r + c) = P(r, c);
  }
  return z;
}

// ---------------------------------------------------------------------------
// Complex structures

using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// Complex structure, affine in the real and imaginary parts of u in C^k:
/// S(u) = base + sum_j Re(u_j) re_directions[j] + Im(u_j) im_directions[j].
struct ComplexAffineStructure {
  ComplexMatrix base;
  std::vector<ComplexMatrix> re_directions;
  std::vector<ComplexMatrix> im_directions;

  /// Complex-linear case S(u) = base + sum_j u_j D_j.
  static ComplexAffineStructure complex_linear(ComplexMatrix base, const std::vector<ComplexMatrix>& dirs) {
    ComplexAffineStructure s{std::move(base), dirs, {}};
    const std::complex<double> i(0.0, 1.0);
    for (const auto& d : dirs) s.im_directions.push_back(i * d);
    return s;
  }

  int num_params() const { return static_cast<int>(re_directions.size()); }

  ComplexMatrix evaluate(const ComplexVector& u) const {
    ComplexMatrix out = base;
    for (int j = 0; j < num_params(); ++j) {
      out += u(j).real() * re_directions[static_cast<std::size_t>(j)] +
             u(j).imag() * im_directions[static_cast<std::size_t>(j)];
    }
    return out;
  }
};

/// ((Re U, -Im U), (Im U, Re U)); rank deficient iff U is.
inline Matrix realify(const ComplexMatrix& U) {
  const auto m = U.rows();
  const auto n = U.cols();
  Matrix R(2 * m, 2 * n);
  R.topLeftCorner(m, n) = U.real();
  R.topRightCorner(m, n) = -U.imag();
  R.bottomLeftCorner(m, n) = U.imag();
  R.bottomRightCorner(m, n) = U.real();
  return R;
}

/// Real 2m x 2n structure over (Re u, Im u) with the same objective.
inline std::pair<AffineStructure, Vector> complex_to_real(const ComplexAffineStructure& s,
                                                          const ComplexVector& theta) {
  const int k = s.num_params();
  if (static_cast<int>(s.im_directions.size()) != k) {
    throw std::invalid_argument("complex_to_real: re/im direction count mismatch");
  }
  if (theta.size() != k) throw std::invalid_argument("complex_to_real: theta length mismatch");
  for (int j = 0; j < k; ++j) {
    const auto& re = s.re_directions[static_cast<std::size_t>(j)];
    const auto& im = s.im_directions[static_cast<std::size_t>(j)];
    if (re.rows() != s.base.rows() || re.cols() != s.base.cols() || im.rows() != s.base.rows() ||
        im.cols() != s.base.cols()) {
      throw std::invalid_argument("complex_to_real: direction shape mismatch");
    }
  }
  std::vector<Matrix> dirs;
  dirs.reserve(static_cast<std::size_t>(2 * k));
  for (const auto& d : s.re_directions) dirs.push_back(realify(d));
  for (const auto& d : s.im_directions) dirs.push_back(realify(d));
  Vector t(2 * k);
  t.head(k) = theta.real();
  t.tail(k) = theta.imag();
  return {AffineStructure(realify(s.base), std::move(dirs)), std::move(t)};
}

}  // namespace stls
