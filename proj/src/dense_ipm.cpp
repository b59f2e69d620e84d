#include "quadqp/kkt.hpp"
#include "quadqp/solvers.hpp"

#include "reduced_qp.hpp"
#include "solver_common.hpp"

#include <algorithm>
#include <cmath>

namespace quadqp {

namespace {

using detail::inf_norm;
using detail::max_step;

// Normal-equations factorization M = H + Aᵀ diag(w) A with one regularized retry.
bool factor(const detail::ReducedQp& red, const Vec& weight, Eigen::LLT<Mat>& llt,
            FlopCounter& flops) {
  const auto& rows = red.rows;
  const int nd = rows.num_dense();
  Mat M = red.H;
  if (nd > 0) {
    const Mat WG = weight.head(nd).asDiagonal() * rows.G;
    M.noalias() += rows.G.transpose() * WG;
    flops.syrk(M.rows(), nd);
  }
  for (int i = 0; i < rows.num_box(); ++i) M(rows.box_var[i], rows.box_var[i]) += weight(nd + i);
  if (M.rows() == 0) return true;
  llt.compute(M);
  flops.potrf(M.rows());
  if (llt.info() == Eigen::Success) return true;
  const double reg = 1e-12 * (1.0 + M.diagonal().cwiseAbs().maxCoeff());
  M.diagonal().array() += reg;
  llt.compute(M);
  flops.potrf(M.rows());
  return llt.info() == Eigen::Success;
}

struct Direction {
  Vec dw, ds, dl;
};

}  // namespace

QpSolution solve_dense_ipm(const DenseQp& qp, const SolverSettings& settings) {
  detail::Stopwatch clock;
  qp.validate();
  detail::check_settings(settings, "solve_dense_ipm");
  const double tol = settings.tolerance;

  QpSolution sol;
  FlopCounter flops;
  detail::Reduction reduction(qp, tol, flops);
  const auto& red = reduction.reduced();
  const auto& rows = red.rows;
  const int nz = static_cast<int>(red.H.rows());
  const int m = rows.size();

  auto finish = [&](const Vec& w, const Vec& lambda, SolveStatus status) {
    sol.primal = reduction.primal(w);
    reduction.recover_duals(sol.primal, lambda, sol.eq_duals, sol.ineq_duals, sol.box_duals);
    sol.kkt = kkt_residuals(qp, sol.primal, sol.eq_duals, sol.ineq_duals, sol.box_duals);
    sol.objective = qp.objective(sol.primal);
    sol.status = status;
    sol.flops = flops.total();
    sol.solve_time = clock.seconds();
    return sol;
  };

  if (!reduction.equalities_consistent() || red.trivially_infeasible) {
    sol.infeasible_constraint = red.trivially_infeasible;
    return finish(Vec::Zero(nz), Vec::Zero(m), SolveStatus::kInfeasible);
  }

  Vec h(m);
  h << rows.h, rows.box_h;

  Vec w = Vec::Zero(nz);
  Vec lambda = Vec::Ones(m);
  double floor = 1.0;
  if (settings.ipm_warm_start && settings.warm_start) {
    const auto& ws = *settings.warm_start;
    if (ws.primal && ws.primal->size() == qp.num_vars()) {
      w = reduction.reduce_primal(*ws.primal);
      floor = 1e-2;
    }
    if (ws.ineq_duals && ws.box_duals && ws.ineq_duals->size() == qp.num_general() &&
        ws.box_duals->size() == qp.num_vars()) {
      for (int i = 0; i < m; ++i) {
        const ConstraintId id = rows.id(i);
        const int k = id / 2;
        const double z = k < qp.num_general() ? (*ws.ineq_duals)(k) : (*ws.box_duals)(k - qp.num_general());
        lambda(i) = std::max(id % 2 == 1 ? z : -z, floor);
      }
    }
  }
  Vec s = (h - rows.values(w)).cwiseMax(floor);

  Eigen::LLT<Mat> llt;
  const double scale = 1.0 + inf_norm(red.g) + inf_norm(h);

  auto solve_newton = [&](const Vec& rd, const Vec& rp, const Vec& rc) {
    Direction d;
    const Vec t = (lambda.cwiseProduct(rp) - rc).cwiseQuotient(s);
    Vec rhs = -rd;
    rows.add_transpose_times(-t, rhs);
    d.dw = nz > 0 ? Vec(llt.solve(rhs)) : Vec();
    flops.trsv(nz);
    flops.trsv(nz);
    d.ds = -rp - rows.values(d.dw);
    d.dl = (-rc - lambda.cwiseProduct(d.ds)).cwiseQuotient(s);
    return d;
  };

  int iter = 0;
  double prev_merit = kInf;
  SolveStatus status = SolveStatus::kMaxIter;
  while (true) {
    Vec rd = red.H * w + red.g;
    rows.add_transpose_times(lambda, rd);
    const Vec aw = rows.values(w);
    const Vec rp = aw + s - h;

    const double viol = m ? std::max(0.0, (aw - h).maxCoeff()) : 0.0;
    const double comp = m ? lambda.cwiseProduct(h - aw).cwiseAbs().maxCoeff() : 0.0;
    const double merit = std::max({inf_norm(rd), viol, comp});
    if (detail::should_verify(merit, prev_merit, tol, iter >= settings.max_iterations)) {
      const QpSolution probe = finish(w, lambda, SolveStatus::kOptimal);
      if (probe.kkt.max() <= tol) {
        status = SolveStatus::kOptimal;
        break;
      }
    }
    prev_merit = merit;
    if (iter >= settings.max_iterations) break;
    if (inf_norm(lambda) > detail::kDivergedDual * scale || !w.allFinite()) {
      status = SolveStatus::kInfeasible;
      break;
    }

    const std::int64_t before = flops.total();
    const Vec weight = m ? Vec(lambda.cwiseQuotient(s)) : Vec();
    if (!factor(red, weight, llt, flops)) {
      status = SolveStatus::kNumericalFailure;
      break;
    }
    ++iter;

    if (m == 0) {
      w += nz > 0 ? Vec(llt.solve(-rd)) : Vec();
      flops.trsv(nz);
      flops.trsv(nz);
      sol.iteration_flops.push_back(flops.total() - before);
      continue;
    }

    const double mu = s.dot(lambda) / m;
    const Vec rc = s.cwiseProduct(lambda);
    const Direction aff = solve_newton(rd, rp, rc);
    const double a_aff = std::min(max_step(s, aff.ds), max_step(lambda, aff.dl));
    const double mu_aff = (s + a_aff * aff.ds).dot(lambda + a_aff * aff.dl) / m;
    const double sigma = std::pow(mu_aff / mu, 3);

    const Vec rc2 = (rc + aff.ds.cwiseProduct(aff.dl)).array() - sigma * mu;
    const Direction d = solve_newton(rd, rp, rc2);
    const double alpha = std::min(1.0, 0.995 * std::min(max_step(s, d.ds), max_step(lambda, d.dl)));
    w += alpha * d.dw;
    s += alpha * d.ds;
    lambda += alpha * d.dl;
    sol.iteration_flops.push_back(flops.total() - before);
  }

  sol.iterations = iter;
  finish(w, lambda, status);
  for (int i = 0; i < m; ++i) {
    if (lambda(i) > s(i)) sol.active_set.push_back(rows.id(i));
  }
  std::sort(sol.active_set.begin(), sol.active_set.end());
  return sol;
}

FlopReport flop_report(const QpSolution& sol) {
  FlopReport r;
  r.total = sol.flops;
  r.per_iteration = sol.iteration_flops;
  if (!r.per_iteration.empty()) {
    double sum = 0.0;
    for (auto f : r.per_iteration) sum += static_cast<double>(f);
    r.mean_per_iteration = sum / static_cast<double>(r.per_iteration.size());
  }
  return r;
}

}  // namespace quadqp
