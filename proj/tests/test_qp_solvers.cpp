#include "quadqp/condensing.hpp"
#include "quadqp/kkt.hpp"
#include "quadqp/solvers.hpp"

#include "support/oracles.hpp"
#include "support/random_mpc.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace quadqp;

namespace {

DenseQp scalar_qp() {
  // min ½x² − x  s.t. x ≤ 0
  DenseQp qp = DenseQp::with_dims(1, 0, 1);
  qp.H(0, 0) = 1.0;
  qp.g(0) = -1.0;
  qp.C(0, 0) = 1.0;
  qp.c_hi(0) = 0.0;
  return qp;
}

using Solver = QpSolution (*)(const DenseQp&, const SolverSettings&);

QpSolution solve_with(const std::string& name, const DenseQp& qp, const SolverSettings& s = {}) {
  if (name == "dense_ipm") return solve_dense_ipm(qp, s);
  if (name == "active_set") return solve_active_set(qp, s);
  // riccati on a one-stage problem: x0 empty, u = x, terminal empty
  StagewiseQp sw;
  QpStage st = QpStage::zeros(0, qp.num_vars(), 0, qp.num_general());
  st.R = qp.H;
  st.r = qp.g;
  st.u_lo = qp.x_lo;
  st.u_hi = qp.x_hi;
  st.D = qp.C;
  st.lo = qp.c_lo;
  st.hi = qp.c_hi;
  sw.stages.push_back(st);
  sw.stages.push_back(QpStage::zeros(0, 0, 0, 0));
  sw.x0 = Vec(0);
  return solve_riccati_ipm(sw, s);
}

class AllSolvers : public ::testing::TestWithParam<std::string> {};

}  // namespace

TEST_P(AllSolvers, ScalarBoundActive) {
  const auto sol = solve_with(GetParam(), scalar_qp());
  ASSERT_EQ(sol.status, SolveStatus::kOptimal);
  EXPECT_NEAR(sol.primal(0), 0.0, 1e-8);
  EXPECT_NEAR(sol.ineq_duals(0), 1.0, 1e-7);
}

TEST_P(AllSolvers, UnconstrainedIdentity) {
  DenseQp qp = DenseQp::with_dims(3, 0, 0);
  qp.H.setIdentity();
  qp.g << 1.0, -2.0, 0.5;
  const auto sol = solve_with(GetParam(), qp);
  ASSERT_EQ(sol.status, SolveStatus::kOptimal);
  EXPECT_LT((sol.primal + qp.g).cwiseAbs().maxCoeff(), 1e-10);
}

TEST_P(AllSolvers, MatchesEnumerationOracle) {
  // The one-stage Riccati wrapper carries no equality rows.
  const bool eq_ok = GetParam() != "riccati";
  std::mt19937 rng(7);
  for (int t = 0; t < 30; ++t) {
    const int n = 2 + t % 10;
    const auto qp = oracle::random_dense_qp(rng, n, 1 + t % 8, eq_ok && t % 3 == 0 ? 1 : 0);
    const auto ref = oracle::enumerate_active_sets(qp);
    ASSERT_TRUE(ref.has_value());
    const auto sol = solve_with(GetParam(), qp);
    ASSERT_EQ(sol.status, SolveStatus::kOptimal) << "instance " << t;
    EXPECT_LT((sol.primal - *ref).cwiseAbs().maxCoeff(), 1e-7) << "instance " << t;
    EXPECT_LE(sol.kkt.max(), 1e-8);
  }
}

TEST_P(AllSolvers, InfeasibleDetected) {
  // x ≤ −1 and x ≥ 1
  DenseQp qp = DenseQp::with_dims(1, 0, 2);
  qp.H(0, 0) = 1.0;
  qp.C << 1.0, 1.0;
  qp.c_hi(0) = -1.0;
  qp.c_lo(1) = 1.0;
  const auto sol = solve_with(GetParam(), qp);
  EXPECT_EQ(sol.status, SolveStatus::kInfeasible);
}

INSTANTIATE_TEST_SUITE_P(Solvers, AllSolvers, ::testing::Values("dense_ipm", "active_set", "riccati"));

TEST(ActiveSet, InfeasibleCertificateNamesARow) {
  DenseQp qp = DenseQp::with_dims(1, 0, 2);
  qp.H(0, 0) = 1.0;
  qp.C << 1.0, 1.0;
  qp.c_hi(0) = -1.0;
  qp.c_lo(1) = 1.0;
  const auto sol = solve_active_set(qp);
  ASSERT_EQ(sol.status, SolveStatus::kInfeasible);
  ASSERT_TRUE(sol.infeasible_constraint.has_value());
  EXPECT_TRUE(*sol.infeasible_constraint == 1 || *sol.infeasible_constraint == 2);
}

TEST(ActiveSet, EqualityOnlyNeedsNoChanges) {
  DenseQp qp = DenseQp::with_dims(3, 1, 0);
  qp.H.setIdentity();
  qp.g << 1.0, 2.0, 3.0;
  qp.A_eq << 1.0, 1.0, 1.0;
  qp.b_eq << 1.0;
  const auto sol = solve_active_set(qp);
  ASSERT_EQ(sol.status, SolveStatus::kOptimal);
  EXPECT_EQ(sol.iterations, 0);
  EXPECT_NEAR(sol.primal.sum(), 1.0, 1e-12);
}

TEST(ActiveSet, WarmStartWithFinalSetConvergesImmediately) {
  std::mt19937 rng(3);
  for (int t = 0; t < 20; ++t) {
    const auto qp = oracle::random_dense_qp(rng, 8, 8);
    const auto cold = solve_active_set(qp);
    ASSERT_TRUE(cold.optimal());
    SolverSettings s;
    s.warm_start = cold.as_warm_start();
    const auto warm = solve_active_set(qp, s);
    ASSERT_TRUE(warm.optimal());
    EXPECT_LE(warm.iterations, 1);
    EXPECT_LE(warm.iterations, cold.iterations);
    EXPECT_LT((warm.primal - cold.primal).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(ActiveSet, WrongWarmStartStillConverges) {
  std::mt19937 rng(4);
  for (int t = 0; t < 20; ++t) {
    const auto qp = oracle::random_dense_qp(rng, 6, 8);
    const auto cold = solve_active_set(qp);
    SolverSettings s;
    WarmStart ws;
    for (ConstraintId id = 0; id < 2 * (qp.num_general() + qp.num_vars()); id += 3) ws.active_set.push_back(id);
    s.warm_start = ws;
    const auto warm = solve_active_set(qp, s);
    ASSERT_TRUE(warm.optimal());
    EXPECT_LT((warm.primal - cold.primal).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Presets, SpeedNeverTakesMoreIterations) {
  std::mt19937 rng(11);
  for (int t = 0; t < 10; ++t) {
    const auto qp = oracle::random_dense_qp(rng, 10, 8);
    const auto b = solve_dense_ipm(qp, SolverSettings::from_preset(Preset::kBalance));
    const auto s = solve_dense_ipm(qp, SolverSettings::from_preset(Preset::kSpeed));
    EXPECT_LE(s.iterations, b.iterations);
    EXPECT_LE(s.kkt.max(), 1e-4);
  }
}

TEST(Flops, EmptyProblemCostsNothing) {
  const DenseQp qp = DenseQp::with_dims(0, 0, 0);
  EXPECT_EQ(flop_report(solve_dense_ipm(qp)).total, 0);
  EXPECT_EQ(flop_report(solve_active_set(qp)).total, 0);
}

TEST(Flops, DeterministicForFixedInstance) {
  std::mt19937 rng(5);
  const auto qp = oracle::random_mpc_qp(rng, 6);
  const auto a = solve_riccati_ipm(qp);
  const auto b = solve_riccati_ipm(qp);
  EXPECT_EQ(a.flops, b.flops);
  EXPECT_EQ(a.iteration_flops, b.iteration_flops);
}

TEST(RiccatiIpm, MatchesClassicalLqr) {
  std::mt19937 rng(9);
  std::normal_distribution<double> nd;
  const int nx = 4, nu = 2, N = 15;
  Mat A(nx, nx), B(nx, nu);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < nx; ++j) A(i, j) = 0.3 * nd(rng) + (i == j ? 1.0 : 0.0);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < nu; ++j) B(i, j) = nd(rng);
  const Mat Q = Vec::Constant(nx, 2.0).asDiagonal();
  const Mat R = Vec::Constant(nu, 0.5).asDiagonal();
  const Mat QN = 5.0 * Mat::Identity(nx, nx);
  Vec x0(nx);
  x0 << 1.0, -1.0, 0.5, 2.0;

  StagewiseQp qp;
  qp.x0 = x0;
  for (int k = 0; k < N; ++k) {
    QpStage s = QpStage::zeros(nx, nu, nx, 0);
    s.A = A;
    s.B = B;
    s.Q = Q;
    s.R = R;
    qp.stages.push_back(s);
  }
  QpStage term = QpStage::zeros(nx, 0, 0, 0);
  term.Q = QN;
  qp.stages.push_back(term);

  const auto sol = solve_riccati_ipm(qp);
  ASSERT_TRUE(sol.optimal());
  const auto traj = condensing::split_stagewise(sol.primal, qp);
  const auto ref = oracle::lqr_rollout(A, B, Q, R, QN, x0, N);
  for (int k = 0; k < N; ++k) {
    EXPECT_LT((traj.u[k] - ref.u[k]).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((traj.x[k + 1] - ref.x[k + 1]).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(RiccatiIpm, SingleStageMatchesDenseOnFlattened) {
  std::mt19937 rng(21);
  for (int t = 0; t < 5; ++t) {
    const auto qp = oracle::random_mpc_qp(rng, 1);
    const auto ric = solve_riccati_ipm(qp);
    const auto dense = solve_dense_ipm(flatten(qp));
    ASSERT_TRUE(ric.optimal());
    ASSERT_TRUE(dense.optimal());
    EXPECT_LT((ric.primal - dense.primal).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(RiccatiIpm, MatchesCondensedDenseIpm) {
  std::mt19937 rng(22);
  for (int t = 0; t < 3; ++t) {
    const auto qp = oracle::random_mpc_qp(rng, 10);
    const auto ric = solve_riccati_ipm(qp);
    ASSERT_TRUE(ric.optimal());
    const auto cd = condensing::full_condense(qp);
    const auto dense = solve_dense_ipm(cd.qp);
    ASSERT_TRUE(dense.optimal());
    const auto traj = condensing::expand_solution(dense, cd.map, qp);
    const auto rt = condensing::split_stagewise(ric.primal, qp);
    for (int k = 0; k < qp.horizon(); ++k) {
      EXPECT_LT((traj.u[k] - rt.u[k]).cwiseAbs().maxCoeff(), 1e-6);
    }
    // independent KKT check on the stagewise problem
    EXPECT_LE(kkt_residuals(qp, ric.primal, ric.eq_duals, ric.ineq_duals, ric.box_duals).max(), 1e-8);
  }
}

TEST(RiccatiIpm, SwingForcesExactlyZero) {
  std::mt19937 rng(23);
  const auto qp = oracle::random_mpc_qp(rng, 10);
  const auto sol = solve_riccati_ipm(qp);
  ASSERT_TRUE(sol.optimal());
  const auto traj = condensing::split_stagewise(sol.primal, qp);
  for (int k = 0; k < qp.horizon(); ++k) {
    for (int j = 0; j < 12; ++j) {
      if (qp.stages[k].u_lo(j) == 0.0 && qp.stages[k].u_hi(j) == 0.0) EXPECT_EQ(traj.u[k](j), 0.0);
    }
  }
}

TEST(Settings, RejectsBadTolerance) {
  SolverSettings s;
  s.tolerance = 0.0;
  EXPECT_THROW(solve_dense_ipm(scalar_qp(), s), ParameterError);
  s = {};
  s.max_iterations = 0;
  EXPECT_THROW(solve_active_set(scalar_qp(), s), ParameterError);
}
