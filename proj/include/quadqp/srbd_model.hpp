#pragma once

#include "quadqp/common.hpp"

#include <array>
#include <vector>

namespace quadqp::srbd {

inline constexpr int kStateDim = 13;
inline constexpr int kInputDim = 12;
inline constexpr int kNumLegs = 4;

/// Offsets into the flattened state [Θ(3), p(3), ω(3), ṗ(3), g(1)].
namespace idx {
inline constexpr int kOrientation = 0;
inline constexpr int kPosition = 3;
inline constexpr int kAngularVelocity = 6;
inline constexpr int kLinearVelocity = 9;
inline constexpr int kGravity = 12;
}  // namespace idx

using StateVec = Eigen::Matrix<double, kStateDim, 1>;
using StateMat = Eigen::Matrix<double, kStateDim, kStateDim>;
using InputMat = Eigen::Matrix<double, kStateDim, kInputDim>;

/// Single-rigid-body state. Orientation is ZYX Euler (roll, pitch, yaw).
struct SrbdState {
  Vec3 orientation = Vec3::Zero();
  Vec3 position = Vec3::Zero();
  Vec3 angular_velocity = Vec3::Zero();
  Vec3 linear_velocity = Vec3::Zero();
  double gravity = 9.81;

  [[nodiscard]] StateVec to_vector() const;
  static SrbdState from_vector(const StateVec& x);

  [[nodiscard]] double roll() const { return orientation.x(); }
  [[nodiscard]] double pitch() const { return orientation.y(); }
  [[nodiscard]] double yaw() const { return orientation.z(); }
};

struct SrbdParams {
  double mass = 15.0;
  Mat3 body_inertia = Vec3(0.12, 0.30, 0.32).asDiagonal();
  double friction_coefficient = 0.6;
  Vec3 force_min = Vec3(-500.0, -500.0, 5.0);
  Vec3 force_max = Vec3(500.0, 500.0, 500.0);
  double dt = 0.02;

  /// Throws ParameterError on mass <= 0, non-SPD inertia, μ < 0, dt <= 0 or
  /// force_min > force_max.
  void validate() const;
};

using FootPositions = std::array<Vec3, kNumLegs>;

struct ContinuousDynamics {
  StateMat A = StateMat::Zero();
  InputMat B = InputMat::Zero();
};

struct LinearDynamics {
  StateMat A = StateMat::Identity();
  std::vector<InputMat> B;
};

enum class Discretization { kForwardEuler, kZeroOrderHold };

/// Yaw-linearized SRBD around `state`:
///   Θ̇ = Rz(ψ)ᵀ ω,  ṗ = v,  ω̇ = I_w⁻¹ Σ (r_j − p) × f_j,  v̇ = Σ f_j / m − g ê_z
/// with I_w = Rz(ψ) I_body Rz(ψ)ᵀ.
ContinuousDynamics linearize_continuous(const SrbdState& state, const FootPositions& feet,
                                        const SrbdParams& params);

/// Discrete stage pair (A, B). Forward Euler: A = I + A_c dt, B = B_c dt.
/// ZOH uses the exponential of the augmented matrix [[A_c, B_c], [0, 0]] dt.
std::pair<StateMat, InputMat> discretize(const StateMat& A_c, const InputMat& B_c, double dt,
                                         Discretization method = Discretization::kForwardEuler);

}  // namespace quadqp::srbd
