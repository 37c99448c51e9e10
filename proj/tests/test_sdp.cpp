#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "stls/baseline.hpp"
#include "stls/certificate.hpp"
#include "stls/naive.hpp"
#include "stls/sdp.hpp"
#include "stls/solver.hpp"

namespace stls {
namespace {

ProblemInstance example31(double theta) { return ProblemInstance(oracle::example31(), Vector::Constant(1, theta)); }

Vector sphere_point(int k, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Vector v(k);
  for (auto& e : v) e = nd(rng);
  return v.normalized();
}

double min_eig(const Matrix& A) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (A + A.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

TEST(AssembleTest, SparseConstraintsMatchDense) {
  const auto inst = ProblemInstance(hankel_structure(3, 4), Vector::LinSpaced(6, -1, 2));
  const auto L = build_lifted(inst);
  const auto P = assemble_primal(L, inst.weight);
  ASSERT_TRUE(P.materialized());
  ASSERT_EQ(P.num_constraints(), 1 + L.n * L.N + static_cast<int>(L.minor_set.size()));
  for (int i = 0; i < L.n; ++i) {
    for (int j = 0; j < L.N; ++j) {
      const Matrix dense = P.constraint(1 + i * L.N + j).to_dense(L.N);
      EXPECT_LE((dense - constraint_matrix(L, i, j)).cwiseAbs().maxCoeff(), 1e-15);
    }
  }
  Matrix T = Matrix::Zero(L.N, L.N);
  T.topLeftCorner(3, 3).setIdentity();
  EXPECT_EQ(P.constraint(0).to_dense(L.N), T);
  EXPECT_EQ(P.rhs()(0), 1.0);
  EXPECT_EQ(P.rhs().tail(P.num_constraints() - 1).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GE(min_eig(P.objective()), -1e-14);
  EXPECT_THROW(P.constraint(P.num_constraints()), std::out_of_range);
}

TEST(AssembleTest, LargeProblemsAreNotMaterialized) {
  const auto inst = ProblemInstance(hankel_structure(3, 70), Vector::Ones(72));
  const auto L = build_lifted(inst);
  ASSERT_GT(L.N, 200);
  const auto P = assemble_primal(L, inst.weight);
  EXPECT_FALSE(P.materialized());
  const Matrix dense = P.constraint(1 + 5 * L.N + 17).to_dense(L.N);
  EXPECT_LE((dense - constraint_matrix(L, 5, 17)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(assemble_primal(L, WeightSpec::identity(3)), std::invalid_argument);
}

TEST(AssembleTest, ConstraintsAreEvenInX) {
  const auto L = build_lifted(example31(0.4));
  Vector x(4);
  x << 0.3, -0.2, 0.7, 0.1;
  const auto a = qcqp_residuals(L, x);
  const auto b = qcqp_residuals(L, -x);
  EXPECT_EQ(a.lifted, b.lifted);
  EXPECT_EQ(a.minors, b.minors);
}

TEST(SolveTest, SmallGenericSdp) {
  // min C.X s.t. trace X = 1 has value lambda_min(C).
  std::mt19937_64 rng(1);
  const Matrix R = Matrix::Random(5, 5);
  const Matrix C = R + R.transpose();
  SparseSymmetric tr;
  for (int i = 0; i < 5; ++i) tr.entries.push_back({i, i, 1.0});
  const auto sol = solve(SdpProblem(C, {tr}, Vector::Ones(1)));
  ASSERT_EQ(sol.status, SolveStatus::kOptimal);
  EXPECT_NEAR(sol.primal_value, min_eig(C), 1e-7);
  EXPECT_NEAR(sol.dual_value, min_eig(C), 1e-7);
}

TEST(SolveTest, Example31SingularThetaHasZeroValue) {
  for (bool reduce : {true, false}) {
    SolverConfig cfg;
    cfg.reduce_kernel = reduce;
    const auto L = build_lifted(example31(1.0));
    const auto sol = solve(assemble_primal(L, WeightSpec::identity(1)), cfg);
    ASSERT_EQ(sol.status, SolveStatus::kOptimal);
    EXPECT_LE(sol.primal_value, 1e-8);
  }
}

TEST(SolveTest, ReducedAndGenericAgreeOnExample31) {
  for (double th : {0.3, 0.7, 2.5, -1.0, 10.0}) {
    const auto inst = example31(th);
    const auto L = build_lifted(inst);
    const auto P = assemble_primal(L, inst.weight);
    SolverConfig generic;
    generic.reduce_kernel = false;
    const auto a = solve(P);
    const auto b = solve(P, generic);
    ASSERT_EQ(a.status, SolveStatus::kOptimal);
    ASSERT_EQ(b.status, SolveStatus::kOptimal);
    const double expect = oracle::example31_distance(th);
    EXPECT_NEAR(a.primal_value, expect, 1e-6 * (1 + expect));
    EXPECT_NEAR(b.primal_value, expect, 1e-6 * (1 + expect));
    EXPECT_NEAR(a.gamma, b.gamma, 1e-6 * (1 + expect));
    EXPECT_TRUE(verify_certificate(L, inst.weight, {a.gamma, a.mu, a.Sigma}, 1e-6).valid);
    EXPECT_TRUE(verify_certificate(L, inst.weight, {b.gamma, b.mu, b.Sigma}, 1e-6).valid);
  }
}

TEST(SolveTest, HankelOnesHasZeroValue) {
  // theta lies in the rank-deficient set. The left kernel of S(theta) is
  // two-dimensional, so the solver returns a rank-two X here.
  const auto inst = ProblemInstance(hankel_structure(3, 3), Vector::Ones(5));
  const auto sol = solve(assemble_primal(build_lifted(inst), inst.weight));
  ASSERT_EQ(sol.status, SolveStatus::kOptimal);
  EXPECT_LE(sol.primal_value, 1e-8);
}

TEST(SolveTest, PostconditionsOnRandomHankel) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 10; ++t) {
    const auto inst = ProblemInstance(hankel_structure(3, 5), sphere_point(7, rng));
    const auto L = build_lifted(inst);
    const auto P = assemble_primal(L, inst.weight);
    const auto sol = solve(P);
    ASSERT_EQ(sol.status, SolveStatus::kOptimal);
    const double tol = 1e-7;
    // Equality constraints, via S^T Sym(X) and the block-symmetry residual.
    EXPECT_LE((L.s_vectors.transpose() * block_sym(sol.X, L.m)).cwiseAbs().maxCoeff(), tol);
    EXPECT_LE((block_sym(sol.X, L.m) - sol.X).cwiseAbs().maxCoeff(), tol);
    EXPECT_NEAR(sol.X.topLeftCorner(3, 3).trace(), 1.0, tol);
    EXPECT_GE(min_eig(sol.X), -tol);
    EXPECT_GE(min_eig(sol.slack), -tol);
    EXPECT_GE(min_eig(dual_slack(L, inst.weight, {sol.gamma, sol.mu, sol.Sigma})), -tol);
    EXPECT_LE(sol.dual_value, sol.primal_value + 1e-8);
    EXPECT_GE(sol.primal_value, -1e-8);
    // Multipliers reassemble to the reported slack.
    Matrix M = P.objective();
    for (int i = 0; i < P.num_constraints(); ++i) P.constraint(i).add_to(M, -sol.multipliers(i));
    EXPECT_LE((M - sol.slack).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(SolveTest, RandomHankel3x5IsAlwaysRankOne) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    const auto inst = ProblemInstance(hankel_structure(3, 5), sphere_point(7, rng));
    const auto sol = solve(assemble_primal(build_lifted(inst), inst.weight));
    ASSERT_EQ(sol.status, SolveStatus::kOptimal);
    Eigen::SelfAdjointEigenSolver<Matrix> es(sol.X, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    EXPECT_LE(ev(ev.size() - 2) / ev(ev.size() - 1), 1e-5) << "trial " << t;
  }
}

TEST(SolveTest, WeakDualityAgainstFeasiblePoints) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 20; ++t) {
    const auto inst = ProblemInstance(hankel_structure(3, 6), sphere_point(8, rng));
    const auto sol = solve(assemble_primal(build_lifted(inst), inst.weight));
    // Feasible points: rank-deficient Hankel fills and the baseline output.
    for (int r = 0; r < 5; ++r) {
      const Vector u = oracle::exponential_sum(8, 2, rng);
      EXPECT_LE(sol.dual_value, (u - inst.theta).squaredNorm() + 1e-8);
    }
    const auto loc = local_solve(inst);
    EXPECT_LE(sol.dual_value, loc.objective + 1e-8);
  }
}

TEST(SolveTest, Deterministic) {
  const auto inst = ProblemInstance(hankel_structure(3, 6), Vector::LinSpaced(8, -0.5, 0.9));
  const auto P = assemble_primal(build_lifted(inst), inst.weight);
  const auto a = solve(P);
  const auto b = solve(P);
  EXPECT_EQ(a.X, b.X);
  EXPECT_EQ(a.multipliers, b.multipliers);
  EXPECT_EQ(a.gamma, b.gamma);
}

TEST(SolveTest, ExternalSolverIsCalled) {
  SolverConfig cfg;
  cfg.solver_kind = SolverKind::kExternal;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  int calls = 0;
  cfg.external = [&](const SdpProblem& p) {
    ++calls;
    SdpSolution s;
    s.X = Matrix::Zero(p.dim(), p.dim());
    s.status = SolveStatus::kMaxIter;
    return s;
  };
  const auto sol = solve(assemble_primal(build_lifted(example31(0.5)), WeightSpec::identity(1)), cfg);
  EXPECT_EQ(calls, 1);
  EXPECT_EQ(sol.status, SolveStatus::kMaxIter);

  SolverConfig bad;
  bad.feas_tol = 0.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = SolverConfig{};
  bad.max_iter = 0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(CertificateTest, TrivialCertificate) {
  const auto L = build_lifted(example31(3.0));
  const auto c = verify_certificate(L, WeightSpec::identity(1), {0.0, Matrix::Zero(2, 4), Matrix::Zero(4, 4)}, 1e-9);
  EXPECT_TRUE(c.valid);
  EXPECT_EQ(c.bound, 0.0);
}

TEST(CertificateTest, BlockSymmetricSigmaIsRejected) {
  const auto L = build_lifted(example31(3.0));
  const Matrix R = Matrix::Random(4, 4);
  const Matrix S = block_sym(R + R.transpose(), 2);
  const auto c = verify_certificate(L, WeightSpec::identity(1), {0.0, Matrix::Zero(2, 4), S}, 1e-9);
  EXPECT_FALSE(c.valid);
  EXPECT_NE(c.reason.find("skew"), std::string::npos);
  const auto d = verify_certificate(L, WeightSpec::identity(1), {0.0, Matrix::Zero(3, 4), Matrix::Zero(4, 4)}, 1e-9);
  EXPECT_FALSE(d.valid);
}

TEST(CertificateTest, TooLargeGammaIsRejected) {
  const auto L = build_lifted(example31(3.0));
  const auto c = verify_certificate(L, WeightSpec::identity(1), {1.0, Matrix::Zero(2, 4), Matrix::Zero(4, 4)}, 1e-9);
  EXPECT_FALSE(c.valid);
  EXPECT_NE(c.reason.find("semidefinite"), std::string::npos);
}

TEST(NaiveTest, ValueIsZero) {
  std::mt19937_64 rng(5);
  EXPECT_LE(naive_relaxation_value(example31(10.0)), 1e-8);
  for (int t = 0; t < 5; ++t) {
    EXPECT_LE(naive_relaxation_value(ProblemInstance(hankel_structure(3, 5), sphere_point(7, rng))), 1e-8);
    EXPECT_LE(naive_relaxation_value(ProblemInstance(sylvester_structure(3, 2, 1), sphere_point(7, rng))), 1e-8);
  }
}

TEST(NaiveTest, WitnessIsFeasibleWithZeroObjective) {
  const auto inst = ProblemInstance(hankel_structure(3, 5), Vector::LinSpaced(7, 0.1, 0.7));
  const auto P = naive_relaxation(inst);
  const Matrix X = naive_witness(inst);
  EXPECT_EQ(P.objective().cwiseProduct(X).sum(), 0.0);
  for (int i = 0; i < P.num_constraints(); ++i) EXPECT_NEAR(P.constraint(i).dot(X), P.rhs()(i), 1e-15);
  EXPECT_GE(min_eig(X), 0.0);
}

TEST(ExportTest, RoundTrip) {
  const auto L = build_lifted(example31(0.5));
  const auto P = assemble_primal(L, WeightSpec::identity(1));
  std::stringstream ss;
  export_sparse(P, ss);
  std::string line;
  std::getline(ss, line);
  EXPECT_EQ(line[0], '#');
  int dim = 0, mc = 0;
  ss >> dim >> mc;
  EXPECT_EQ(dim, 4);
  EXPECT_EQ(mc, P.num_constraints());
  Vector b(mc);
  for (int i = 0; i < mc; ++i) ss >> b(i);
  EXPECT_EQ(b, P.rhs());
  std::vector<Matrix> mats(static_cast<std::size_t>(mc + 1), Matrix::Zero(dim, dim));
  int idx, r, c;
  double v;
  while (ss >> idx >> r >> c >> v) {
    mats[static_cast<std::size_t>(idx)](r - 1, c - 1) = v;
    mats[static_cast<std::size_t>(idx)](c - 1, r - 1) = v;
  }
  EXPECT_LE((mats[0] - P.objective()).cwiseAbs().maxCoeff(), 1e-15);
  for (int i = 0; i < mc; ++i) {
    EXPECT_LE((mats[static_cast<std::size_t>(i + 1)] - P.constraint(i).to_dense(dim)).cwiseAbs().maxCoeff(), 1e-15);
  }
}

}  // namespace
}  // namespace stls
