#pragma once

#include "quadqp/common.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace quadqp {

/// One stage of a multi-stage optimal-control QP.
///
///   cost      ½ xᵀQx + uᵀSx + ½ uᵀRu + qᵀx + rᵀu
///   dynamics  x_{k+1} = A x + B u + b          (absent on the terminal stage)
///   box       u_lo ≤ u ≤ u_hi
///   general   lo ≤ C x + D u ≤ hi
///
/// Infinite bounds are allowed and mean "no constraint on that side".
struct QpStage {
  Mat A, B;
  Vec b;
  Mat Q, S, R;
  Vec q, r;
  Vec u_lo, u_hi;
  Mat C, D;
  Vec lo, hi;

  [[nodiscard]] int nx() const { return static_cast<int>(Q.rows()); }
  [[nodiscard]] int nu() const { return static_cast<int>(R.rows()); }
  [[nodiscard]] int ng() const { return static_cast<int>(C.rows()); }

  /// Stage with all blocks zero-sized consistently for the given dims.
  static QpStage zeros(int nx, int nu, int nx_next, int ng);
};

/// Sparse multi-stage QP: stages 0..N with x_0 fixed to x0.
/// Variables are ordered [x_0, u_0, x_1, u_1, ..., x_N].
struct StagewiseQp {
  std::vector<QpStage> stages;
  Vec x0;
  double constant = 0.0;

  [[nodiscard]] int horizon() const { return static_cast<int>(stages.size()) - 1; }
  [[nodiscard]] int num_vars() const;
  [[nodiscard]] int num_eq() const;
  /// Box rows (inputs with at least one finite bound) plus general rows.
  [[nodiscard]] int num_ineq() const;

  /// Throws DimensionError when blocks are mutually inconsistent.
  void validate() const;
};

/// Flat QP:  min ½ xᵀHx + gᵀx + constant
///           s.t. A_eq x = b_eq,  c_lo ≤ C x ≤ c_hi,  x_lo ≤ x ≤ x_hi
struct DenseQp {
  Mat H;
  Vec g;
  double constant = 0.0;
  Mat A_eq;
  Vec b_eq;
  Mat C;
  Vec c_lo, c_hi;
  Vec x_lo, x_hi;

  [[nodiscard]] int num_vars() const { return static_cast<int>(H.rows()); }
  [[nodiscard]] int num_eq() const { return static_cast<int>(A_eq.rows()); }
  [[nodiscard]] int num_general() const { return static_cast<int>(C.rows()); }
  [[nodiscard]] int num_ineq() const;

  [[nodiscard]] double objective(const Vec& x) const;

  /// Empty problem of the given shape with infinite bounds.
  static DenseQp with_dims(int n, int n_eq, int n_ineq);
  void validate() const;
};

enum class SolveStatus { kOptimal, kMaxIter, kInfeasible, kNumericalFailure };

std::string to_string(SolveStatus s);
SolveStatus status_from_string(const std::string& s);

struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;
  double dual = 0.0;
  double complementarity = 0.0;

  [[nodiscard]] double max() const;
};

/// Identifier of a one-sided inequality: general row i gives 2i (lower) and
/// 2i+1 (upper); variable bound j follows after all general rows.
using ConstraintId = int;

struct WarmStart {
  std::optional<Vec> primal;
  std::optional<Vec> eq_duals;
  std::optional<Vec> ineq_duals;
  std::optional<Vec> box_duals;
  std::vector<ConstraintId> active_set;
};

/// Solver result. Dual convention: Hx + g + A_eqᵀy + Cᵀz + z_box = 0 with
/// z > 0 on active upper bounds and z < 0 on active lower bounds.
struct QpSolution {
  Vec primal;
  Vec eq_duals;
  Vec ineq_duals;
  Vec box_duals;
  SolveStatus status = SolveStatus::kNumericalFailure;
  int iterations = 0;
  KktResiduals kkt;
  std::int64_t flops = 0;
  std::vector<std::int64_t> iteration_flops;
  double solve_time = 0.0;
  double objective = 0.0;
  std::vector<ConstraintId> active_set;
  /// Set when the active-set solver proves infeasibility (one-sided id).
  std::optional<ConstraintId> infeasible_constraint;

  [[nodiscard]] bool optimal() const { return status == SolveStatus::kOptimal; }
  [[nodiscard]] WarmStart as_warm_start() const;
};

enum class Preset { kBalance, kSpeed };

std::string to_string(Preset p);
Preset preset_from_string(const std::string& s);

struct SolverSettings {
  double tolerance = 1e-8;
  int max_iterations = 100;
  Preset preset = Preset::kBalance;
  /// IPMs use the primal/dual part of the payload only when this is set.
  bool ipm_warm_start = false;
  std::optional<WarmStart> warm_start;

  static SolverSettings from_preset(Preset p);
};

/// Flatten a stagewise problem. Equalities: initial condition (nx_0 rows)
/// then dynamics of stages 0..N-1. Box rows become variable bounds on inputs.
DenseQp flatten(const StagewiseQp& qp);

double stagewise_objective(const StagewiseQp& qp, const std::vector<Vec>& x,
                           const std::vector<Vec>& u);

}  // namespace quadqp
