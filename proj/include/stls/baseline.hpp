#pragma once

// Local baseline: variable projection on the kernel representation with an
// outer Levenberg-Marquardt iteration over unit z.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <unsupported/Eigen/Splines>

#include "stls/structure.hpp"

namespace stls {

enum class InitKind { kSmallestSingular, kUserSupplied };

struct LocalConfig {
  int max_iter = 2000;
  double grad_tol = 1e-10;
  double damping_init = 1e-3;
  InitKind init_kind = InitKind::kSmallestSingular;
  Vector z0;  ///< used with kUserSupplied

  void validate() const {
    if (max_iter < 1) throw std::invalid_argument("LocalConfig: max_iter must be positive");
    if (!(grad_tol > 0.0) || !(damping_init > 0.0)) {
      throw std::invalid_argument("LocalConfig: tolerances must be positive");
    }
  }
};

struct LocalResult {
  Vector u;
  double objective = std::numeric_limits<double>::infinity();
  bool converged = false;
  Vector z;
  int iterations = 0;
  double gradient_norm = 0.0;
};

/// Unit left singular vector of S(theta) for the smallest singular value.
inline Vector init_smallest_singular(const ProblemInstance& instance) {
  Eigen::JacobiSVD<Matrix> svd(instance.structure.evaluate(instance.theta), Eigen::ComputeFullU);
  return svd.matrixU().col(instance.m() - 1);
}

/// Fills unobserved entries of theta by cubic spline interpolation in the
/// parameter index; values beyond the observed range are held constant.
inline Vector spline_complete(const Vector& theta, const Vector& observed) {
  if (observed.size() != theta.size()) throw std::invalid_argument("spline_complete: mask length mismatch");
  std::vector<int> idx;
  for (int i = 0; i < static_cast<int>(observed.size()); ++i) {
    if (observed(i) > 0.5) idx.push_back(i);
  }
  Vector out = theta;
  if (idx.empty()) return Vector::Zero(theta.size());
  if (idx.size() == 1) return Vector::Constant(theta.size(), theta(idx[0]));
  using Spline1 = Eigen::Spline<double, 1>;
  const auto n = static_cast<Eigen::Index>(idx.size());
  Eigen::RowVectorXd pts(n);
  Eigen::RowVectorXd knots(n);
  const double lo = idx.front();
  const double span = idx.back() - lo;
  for (Eigen::Index t = 0; t < n; ++t) {
    pts(t) = theta(idx[static_cast<std::size_t>(t)]);
    knots(t) = (idx[static_cast<std::size_t>(t)] - lo) / span;
  }
  const auto degree = std::min<Eigen::DenseIndex>(3, n - 1);
  const Spline1 spline = Eigen::SplineFitting<Spline1>::Interpolate(pts, degree, knots);
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    if (observed(i) > 0.5) continue;
    const double t = std::clamp((static_cast<double>(i) - lo) / span, 0.0, 1.0);
    out(i) = spline(t)(0);
  }
  return out;
}

namespace detail {

/// Inner problem for fixed z: min ||v||_W^2 s.t. G v = r, with
/// G = [B_1^T z ... B_k^T z] and r = -A_theta^T z.
class Projection {
 public:
  explicit Projection(const ProblemInstance& inst) : inst_(inst), A_(inst.structure.evaluate(inst.theta)) {
    const auto& w = inst.weight;
    definite_ = w.kind() != WeightSpec::Kind::kMask;
    if (definite_) {
      W_ = w.matrix();
      Eigen::LLT<Matrix> llt(W_);
      if (llt.info() != Eigen::Success) throw std::invalid_argument("local_solve: weight must be positive definite");
      L_ = llt.matrixL();
      Winv_ = llt.solve(Matrix::Identity(W_.rows(), W_.cols()));
    } else {
      const Vector mask = w.observed();
      for (int j = 0; j < inst.k(); ++j) (mask(j) > 0.5 ? obs_ : free_).push_back(j);
    }
  }

  int residual_size() const { return definite_ ? inst_.k() : static_cast<int>(obs_.size()); }

  Matrix G(const Vector& z) const {
    Matrix g(inst_.n(), inst_.k());
    for (int j = 0; j < inst_.k(); ++j) g.col(j) = inst_.structure.direction(j).transpose() * z;
    return g;
  }

  /// Minimizing v; the residual e satisfies ||e||^2 = ||v||_W^2.
  Vector v(const Vector& z) const {
    const Matrix g = G(z);
    const Vector r = -A_.transpose() * z;
    if (definite_) {
      const Matrix gamma = g * Winv_ * g.transpose();
      const Vector w = gamma.completeOrthogonalDecomposition().solve(r);
      return Winv_ * g.transpose() * w;
    }
    const auto k = inst_.k();
    Vector out = Vector::Zero(k);
    Matrix Go(g.rows(), static_cast<Eigen::Index>(obs_.size()));
    Matrix Gf(g.rows(), static_cast<Eigen::Index>(free_.size()));
    for (std::size_t t = 0; t < obs_.size(); ++t) Go.col(static_cast<Eigen::Index>(t)) = g.col(obs_[t]);
    for (std::size_t t = 0; t < free_.size(); ++t) Gf.col(static_cast<Eigen::Index>(t)) = g.col(free_[t]);
    // Project out range(Gf), which the free coordinates absorb at no cost.
    Matrix P = Matrix::Identity(g.rows(), g.rows());
    if (Gf.cols() > 0) {
      Eigen::JacobiSVD<Matrix> svd(Gf, Eigen::ComputeFullU);
      const auto& s = svd.singularValues();
      int rank = 0;
      for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > 1e-12 * std::max(1.0, s(0)) * static_cast<double>(g.rows())) ++rank;
      }
      const Matrix U = svd.matrixU().leftCols(rank);
      P -= U * U.transpose();
    }
    const Vector vo = (P * Go).completeOrthogonalDecomposition().solve(P * r);
    for (std::size_t t = 0; t < obs_.size(); ++t) out(obs_[t]) = vo(static_cast<Eigen::Index>(t));
    if (Gf.cols() > 0) {
      const Vector vf = Gf.completeOrthogonalDecomposition().solve(r - Go * vo);
      for (std::size_t t = 0; t < free_.size(); ++t) out(free_[t]) = vf(static_cast<Eigen::Index>(t));
    }
    return out;
  }

  /// Relative violation of G v = r; nonzero when k < n and z admits no exact v.
  double infeasibility(const Vector& z, const Vector& v) const {
    const Vector r = -A_.transpose() * z;
    return (G(z) * v - r).norm() / (1.0 + r.norm());
  }

  Vector residual(const Vector& v) const {
    if (definite_) return L_.transpose() * v;
    Vector e(static_cast<Eigen::Index>(obs_.size()));
    for (std::size_t t = 0; t < obs_.size(); ++t) e(static_cast<Eigen::Index>(t)) = v(obs_[t]);
    return e;
  }

  /// Jacobian of the residual along the columns of T (tangent directions at z).
  Matrix jacobian(const Vector& z, const Vector& v, const Matrix& T) const {
    Matrix J(residual_size(), T.cols());
    if (!definite_) {
      for (Eigen::Index c = 0; c < T.cols(); ++c) {
        const double h = 1e-6;
        const Vector zp = (z + h * T.col(c)).normalized();
        const Vector zm = (z - h * T.col(c)).normalized();
        J.col(c) = (residual(this->v(zp)) - residual(this->v(zm))) / (2.0 * h);
      }
      return J;
    }
    const Matrix g = G(z);
    const Matrix gamma = g * Winv_ * g.transpose();
    const auto cod = gamma.completeOrthogonalDecomposition();
    const Vector w = cod.solve(-A_.transpose() * z);
    for (Eigen::Index c = 0; c < T.cols(); ++c) {
      const Vector t = T.col(c);
      const Matrix dg = G(t);
      const Vector dr = -A_.transpose() * t;
      const Vector dw = cod.solve(dr - dg * v - g * Winv_ * dg.transpose() * w);
      const Vector dv = Winv_ * (dg.transpose() * w + g.transpose() * dw);
      J.col(c) = L_.transpose() * dv;
    }
    return J;
  }

 private:
  const ProblemInstance& inst_;
  Matrix A_;
  bool definite_ = true;
  Matrix W_, L_, Winv_;
  std::vector<int> obs_, free_;
};

/// Orthonormal basis of the complement of unit z.
inline Matrix tangent_basis(const Vector& z) {
  const auto m = z.size();
  Eigen::HouseholderQR<Matrix> qr(z);
  return Matrix(qr.householderQ()).rightCols(m - 1);
}

}  // namespace detail

/// Levenberg-Marquardt over z on the unit sphere with v eliminated.
inline LocalResult local_solve(const ProblemInstance& instance, const LocalConfig& config = {}) {
  config.validate();
  const detail::Projection proj(instance);
  Vector z;
  if (config.init_kind == InitKind::kUserSupplied) {
    if (config.z0.size() != instance.m() || config.z0.norm() == 0.0) {
      throw std::invalid_argument("local_solve: z0 must be a nonzero m-vector");
    }
    z = config.z0.normalized();
  } else if (instance.weight.kind() == WeightSpec::Kind::kMask) {
    const Vector filled = spline_complete(instance.theta, instance.weight.observed());
    z = init_smallest_singular(ProblemInstance(instance.structure, filled));
  } else {
    z = init_smallest_singular(instance);
  }

  LocalResult res;
  Vector v = proj.v(z);
  Vector e = proj.residual(v);
  double f = e.squaredNorm();
  double lambda = config.damping_init;
  const auto m = instance.m();
  int iter = 0;
  for (; iter < config.max_iter; ++iter) {
    if (m == 1) {
      res.converged = true;
      break;
    }
    const Matrix T = detail::tangent_basis(z);
    const Matrix J = proj.jacobian(z, v, T);
    const Vector g = J.transpose() * e;
    res.gradient_norm = 2.0 * g.norm();
    if (res.gradient_norm <= config.grad_tol * (1.0 + f)) {
      res.converged = true;
      break;
    }
    const Matrix JtJ = J.transpose() * J;
    bool accepted = false;
    bool tiny = false;
    while (lambda < 1e16) {
      Matrix H = JtJ;
      H.diagonal().array() += lambda * (1.0 + JtJ.diagonal().maxCoeff());
      const Vector step = H.ldlt().solve(-g);
      if (step.norm() <= 1e-14) {
        tiny = true;
        break;
      }
      const Vector zn = (z + T * step).normalized();
      const Vector vn = proj.v(zn);
      const Vector en = proj.residual(vn);
      const double fn = en.squaredNorm();
      if (fn < f) {
        z = zn;
        v = vn;
        e = en;
        const double rel = (f - fn) / std::max(f, 1e-300);
        f = fn;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        tiny = rel < 1e-15;
        break;
      }
      lambda *= 4.0;
    }
    if (!accepted || tiny) {
      // No descent possible at working precision: a stationary point.
      res.converged = res.gradient_norm <= std::sqrt(config.grad_tol) * (1.0 + f);
      break;
    }
  }
  res.iterations = iter;
  // Least squares in the inner problem does not give a rank-deficient S(u).
  if (proj.infeasibility(z, v) > 1e-8) res.converged = false;
  res.z = z;
  res.u = instance.theta + v;
  res.objective = instance.weight.norm_squared(v);
  return res;
}

}  // namespace stls
