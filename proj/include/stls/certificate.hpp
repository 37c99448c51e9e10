#pragma once

#include <string>

#include "stls/lift.hpp"
#include "stls/sdp.hpp"

namespace stls {

/// Dual point (gamma, mu, Sigma) of the lifted relaxation.
struct DualCertificate {
  double gamma = 0.0;
  Matrix mu;     ///< n x N
  Matrix Sigma;  ///< N x N
};

struct CertificateCheck {
  bool valid = false;
  std::string reason;
  double bound = 0.0;           ///< certified lower bound (gamma) when valid
  double min_eigenvalue = 0.0;  ///< of the dual slack
  double skew_residual = 0.0;   ///< max |block_sym(Sigma)|
};

/// C - gamma (I_m (+) 0) - sum mu_ij Sym(s_i e_j^T) - Sigma.
inline Matrix dual_slack(const LiftedProblem& lifted, const WeightSpec& weight, const DualCertificate& cert) {
  Matrix slack = lifted_objective(weight, lifted.m);
  slack.topLeftCorner(lifted.m, lifted.m).diagonal().array() -= cert.gamma;
  // sum mu_ij Sym(s_i e_j^T) = Sym(S mu).
  slack -= block_sym(lifted.s_vectors * cert.mu, lifted.m);
  slack -= cert.Sigma;
  return 0.5 * (slack + slack.transpose());
}

inline CertificateCheck verify_certificate(const LiftedProblem& lifted, const WeightSpec& weight,
                                           const DualCertificate& cert, double tol) {
  CertificateCheck out;
  if (cert.mu.rows() != lifted.n || cert.mu.cols() != lifted.N || cert.Sigma.rows() != lifted.N ||
      cert.Sigma.cols() != lifted.N || weight.dim() != lifted.k) {
    out.reason = "dimension mismatch";
    return out;
  }
  const double asym = (cert.Sigma - cert.Sigma.transpose()).cwiseAbs().maxCoeff();
  out.skew_residual = block_sym(cert.Sigma, lifted.m).cwiseAbs().maxCoeff();
  if (asym > tol) {
    out.reason = "Sigma is not symmetric";
    return out;
  }
  if (out.skew_residual > tol) {
    out.reason = "Sigma is not block skew-symmetric";
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(dual_slack(lifted, weight, cert), Eigen::EigenvaluesOnly);
  out.min_eigenvalue = eig.eigenvalues()(0);
  if (out.min_eigenvalue < -tol) {
    out.reason = "dual slack is not positive semidefinite";
    return out;
  }
  out.valid = true;
  out.bound = cert.gamma;
  return out;
}

}  // namespace stls
