#pragma once

#include "quadqp/qp_types.hpp"

#include <array>
#include <random>
#include <string>
#include <vector>

namespace quadqp::wbc {

struct Task {
  std::string name;
  Mat J;          // 6 × n_v
  Vec jdot_qdot;  // 6
  double weight = 1.0;
};

/// Dynamics at one control tick: H v̇ + h = S τ + J_cᵀ u.
/// Contact rows of J_c come in xyz triplets, one per contact point.
struct DynamicsSnapshot {
  int n_v = 0;
  Mat H;
  Vec h;
  Mat Jc;
  Vec jdot_qdot_c;
  Mat S;
  Vec tau_min, tau_max;
  std::vector<Task> tasks;

  [[nodiscard]] int num_contact_rows() const { return static_cast<int>(Jc.rows()); }
  [[nodiscard]] int num_contacts() const { return num_contact_rows() / 3; }
  [[nodiscard]] int num_actuated() const { return static_cast<int>(S.cols()); }

  /// Throws DimensionError / InputError when the invariants do not hold
  /// (H SPD, S full column rank, τ_min ≤ τ_max, consistent sizes).
  void validate() const;
};

struct WbcCommand {
  std::vector<Vec> task_accelerations;  // one 6-vector per task
  Vec desired_forces;                   // one entry per contact row
  Vec force_weights;                    // diagonal of w_f

  void validate(const DynamicsSnapshot& snap) const;
};

/// A built WBC problem. Variables are [q̈, u] (reduced) or [q̈, u, τ] (full).
struct WbcProblem {
  DenseQp qp;
  int n_v = 0;
  int n_u = 0;
  int n_tau = 0;
  /// J_c lost row rank; the problem is still emitted.
  bool contact_rank_deficient = false;

  [[nodiscard]] Vec qdd(const Vec& primal) const { return primal.head(n_v); }
  [[nodiscard]] Vec forces(const Vec& primal) const { return primal.segment(n_v, n_u); }
  [[nodiscard]] Vec torques(const Vec& primal) const { return primal.segment(n_v + n_u, n_tau); }
};

/// Floating-base rows of the dynamics plus contact rows; torque limits enter
/// as general rows through the actuated part of the dynamics.
WbcProblem build_reduced_tsid(const DynamicsSnapshot& snap, const WbcCommand& cmd, double mu);

/// Full dynamics as equalities with the torques as extra box-bounded variables.
WbcProblem build_full_tsid(const DynamicsSnapshot& snap, const WbcCommand& cmd, double mu);

/// τ = S⁺ (H q̈ + h − J_cᵀ u) with S⁺ = (SᵀS)⁻¹Sᵀ.
Vec recover_torques(const Vec& qdd, const Vec& u, const DynamicsSnapshot& snap);

/// Weighted task cost Σ w_i‖J_i q̈ + J̇_i q̇ − v̇_d‖² + ‖w_f (u_d − u)‖².
double wbc_cost(const DynamicsSnapshot& snap, const WbcCommand& cmd, const Vec& qdd, const Vec& u);

/// v̇_d = kp·pos_err + kd·vel_err + feedforward.
Vec6 pd_task_acceleration(const Vec6& pos_err, const Vec6& vel_err, double kp, double kd,
                          const Vec6& feedforward = Vec6::Zero());

/// Floating base (6 DoF) with four point-mass feet in absolute coordinates
/// (n_v = 18). Each leg actuator pushes between its hip and its foot.
struct ToyConfig {
  double base_mass = 12.0;
  Vec3 base_inertia = Vec3(0.10, 0.25, 0.30);
  double foot_mass = 0.5;
  double gravity = 9.81;
  Vec3 base_position = Vec3(0.0, 0.0, 0.3);
  double yaw = 0.0;
  std::array<Vec3, 4> hip_offsets = {Vec3(0.19, 0.11, 0.0), Vec3(0.19, -0.11, 0.0),
                                     Vec3(-0.19, 0.11, 0.0), Vec3(-0.19, -0.11, 0.0)};
  std::array<bool, 4> contacts = {true, true, true, true};
  double torque_limit = 200.0;
  double body_weight = 10.0;
  double feet_weight = 1.0;
};

DynamicsSnapshot make_toy_snapshot(const ToyConfig& config = {});

/// Randomized 18-DoF snapshot (H = LLᵀ + εI) that admits a feasible point
/// with contact forces strictly inside the friction pyramid for `mu`.
DynamicsSnapshot random_snapshot(std::mt19937& rng, double mu = 0.6, double torque_limit = 1e6);

/// JSON snapshot format: {n_v, H, h, Jc, jdot_qdot_c, S, tau_min, tau_max,
/// tasks: [{name, J, jdot_qdot, weight}]}, matrices as flat row-major arrays.
DynamicsSnapshot parse_snapshot(const std::string& json_text);
DynamicsSnapshot load_snapshot(const std::string& path);
std::string snapshot_to_json(const DynamicsSnapshot& snap);

}  // namespace quadqp::wbc
