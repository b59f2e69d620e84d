#pragma once

#include "quadqp/qp_types.hpp"
#include "quadqp/srbd_model.hpp"

#include <array>
#include <vector>

namespace quadqp::mpc {

using ContactFlags = std::array<bool, srbd::kNumLegs>;

/// Horizon-length plan: contact flags and footholds for stages 0..N-1 and
/// target states for stages 1..N (targets[k] is the target of x_{k+1}).
struct GaitSequence {
  int horizon = 0;
  double dt = 0.02;
  std::vector<ContactFlags> contacts;
  std::vector<srbd::FootPositions> feet;
  std::vector<srbd::SrbdState> targets;

  void validate() const;
};

enum class ForceReference {
  /// Plain uᵀRu input cost.
  kNone,
  /// (u − u_ref)ᵀR(u − u_ref) with u_ref the least-norm stance-force
  /// distribution balancing the body weight at the linearization point.
  kWrenchBalance,
};

struct MpcWeights {
  srbd::StateVec state = (srbd::StateVec() << 100.0, 100.0, 50.0,  // Θ
                          50.0, 50.0, 100.0,                       // p
                          1.0, 1.0, 1.0,                           // ω
                          1.0, 1.0, 1.0,                           // ṗ
                          0.0)
                             .finished();
  double input = 1e-3;
  ForceReference force_reference = ForceReference::kWrenchBalance;

  void validate() const;
};

inline constexpr int kConeRowsPerLeg = 4;
inline constexpr int kIneqPerStage = 28;

/// Rows a with a·f ≤ 0 encoding ±f_x ≤ μ f_z and ±f_y ≤ μ f_z.
Eigen::Matrix<double, 4, 3> friction_cone_rows(double mu);

struct Dimensions {
  int vars = 0;
  int eq = 0;
  int ineq = 0;

  bool operator==(const Dimensions&) const = default;
};

/// Sizes of the MPC QP at condensing level Np (Np = N is the sparse problem,
/// Np = 0 is the fully condensed dense export with x_0 eliminated).
Dimensions count_dimensions(int N, int Np);

/// Least-norm forces of the stance legs producing (0,0,m g) net force and zero
/// net moment about `com`. Swing-leg entries are zero.
Eigen::Matrix<double, srbd::kInputDim, 1> balancing_forces(const srbd::FootPositions& feet,
                                                            const ContactFlags& contacts,
                                                            const Vec3& com, double weight);

StagewiseQp build_mpc_qp(const GaitSequence& gait, const srbd::SrbdState& current,
                         const srbd::SrbdParams& params, const MpcWeights& weights = {});

}  // namespace quadqp::mpc
