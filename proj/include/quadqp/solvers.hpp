#pragma once

#include "quadqp/qp_types.hpp"

#include <cstdint>
#include <vector>

namespace quadqp {

/// Dense primal-dual interior-point method (Mehrotra predictor-corrector).
/// Variables with equal bounds are fixed and equalities are eliminated
/// through a null-space basis before iterating.
QpSolution solve_dense_ipm(const DenseQp& qp, const SolverSettings& settings = {});

/// Goldfarb-Idnani dual active-set method. Requires H positive definite on
/// the equality null space. `iterations` counts active-set changes.
QpSolution solve_active_set(const DenseQp& qp, const SolverSettings& settings = {});

/// Interior-point method whose Newton systems are solved stage by stage with
/// a Riccati recursion. Inputs with equal bounds are eliminated per stage.
QpSolution solve_riccati_ipm(const StagewiseQp& qp, const SolverSettings& settings = {});

struct FlopReport {
  std::int64_t total = 0;
  std::vector<std::int64_t> per_iteration;
  double mean_per_iteration = 0.0;
};

FlopReport flop_report(const QpSolution& sol);

}  // namespace quadqp
