#pragma once

#include "quadqp/qp_types.hpp"

#include <vector>

namespace quadqp::condensing {

/// Split of an N-stage horizon into Np blocks; larger blocks come first.
struct Partition {
  int N = 0;
  std::vector<int> blocks;

  [[nodiscard]] int num_blocks() const { return static_cast<int>(blocks.size()); }
  [[nodiscard]] int block_start(int i) const;
};

Partition partition(int N, int Np);

/// Affine prediction of the states inside one block from its head state:
///   x_{start+j} = gamma[j] x_head + phi[j] U + offset[j],  j = 0..size
struct BlockPrediction {
  int start = 0;
  int size = 0;
  std::vector<Mat> gamma;
  std::vector<Mat> phi;
  std::vector<Vec> offset;
  /// Offsets of each original stage's inputs inside the block input U.
  std::vector<int> input_offset;
  std::vector<int> input_size;
  int num_inputs = 0;
};

/// Location of a condensed input entry in the original problem.
struct InputOrigin {
  int stage = 0;
  int index = 0;
};

struct CondensedMap {
  int N = 0;
  /// true for the dense export: x_0 is substituted and U is the only variable.
  bool dense = false;
  std::vector<BlockPrediction> blocks;

  /// Original (stage, input index) of input entry `local` of condensed stage `block`.
  [[nodiscard]] InputOrigin origin(int block, int local) const;
};

struct CondensedStagewise {
  StagewiseQp qp;
  CondensedMap map;
};

struct CondensedDense {
  DenseQp qp;
  CondensedMap map;
};

/// Partial condensing: Np block stages plus the retained terminal stage.
CondensedStagewise condense(const StagewiseQp& qp, const Partition& part);

/// Full condensing including the terminal state; variables are the N inputs.
CondensedDense full_condense(const StagewiseQp& qp);

struct Trajectory {
  std::vector<Vec> x;
  std::vector<Vec> u;
  double objective = 0.0;
};

/// Original-horizon inputs carried by a condensed primal vector.
std::vector<Vec> extract_inputs(const Vec& primal, const CondensedMap& map, const StagewiseQp& qp);

/// Rolls the original dynamics out from x0 with the condensed inputs.
Trajectory expand_solution(const QpSolution& sol, const CondensedMap& map, const StagewiseQp& qp);

/// Splits a [x_0, u_0, ..., x_N] vector of a stagewise problem.
Trajectory split_stagewise(const Vec& primal, const StagewiseQp& qp);

/// Max-norm of x_{k+1} − (A x_k + B u_k + b) and of x_0 − x0.
double dynamics_residual(const Trajectory& traj, const StagewiseQp& qp);

}  // namespace quadqp::condensing
