#include "quadqp/srbd_model.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

namespace quadqp::srbd {

StateVec SrbdState::to_vector() const {
  StateVec x;
  x.segment<3>(idx::kOrientation) = orientation;
  x.segment<3>(idx::kPosition) = position;
  x.segment<3>(idx::kAngularVelocity) = angular_velocity;
  x.segment<3>(idx::kLinearVelocity) = linear_velocity;
  x(idx::kGravity) = gravity;
  return x;
}

SrbdState SrbdState::from_vector(const StateVec& x) {
  SrbdState s;
  s.orientation = x.segment<3>(idx::kOrientation);
  s.position = x.segment<3>(idx::kPosition);
  s.angular_velocity = x.segment<3>(idx::kAngularVelocity);
  s.linear_velocity = x.segment<3>(idx::kLinearVelocity);
  s.gravity = x(idx::kGravity);
  return s;
}

void SrbdParams::validate() const {
  if (!(mass > 0.0) || !std::isfinite(mass)) throw ParameterError("SrbdParams: mass must be positive");
  if (!body_inertia.allFinite()) throw ParameterError("SrbdParams: inertia not finite");
  if ((body_inertia - body_inertia.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * (1.0 + body_inertia.cwiseAbs().maxCoeff())) {
    throw ParameterError("SrbdParams: inertia not symmetric");
  }
  Eigen::LLT<Mat3> llt(body_inertia);
  if (llt.info() != Eigen::Success || body_inertia.determinant() <= 0.0) {
    throw ParameterError("SrbdParams: inertia not positive definite");
  }
  if (!(friction_coefficient >= 0.0)) throw ParameterError("SrbdParams: friction coefficient < 0");
  if (!(dt > 0.0)) throw ParameterError("SrbdParams: dt must be positive");
  if ((force_min.array() > force_max.array()).any()) {
    throw ParameterError("SrbdParams: force_min exceeds force_max");
  }
}

ContinuousDynamics linearize_continuous(const SrbdState& state, const FootPositions& feet,
                                        const SrbdParams& params) {
  params.validate();
  if (!state.to_vector().allFinite()) throw InputError("linearize_continuous: non-finite state");
  for (const auto& r : feet) {
    if (!r.allFinite()) throw InputError("linearize_continuous: non-finite foot position");
  }

  const Mat3 Rz = rot_z(state.yaw());
  const Mat3 inertia_world = Rz * params.body_inertia * Rz.transpose();
  const Mat3 inertia_world_inv = inertia_world.inverse();

  ContinuousDynamics dyn;
  dyn.A.block<3, 3>(idx::kOrientation, idx::kAngularVelocity) = Rz.transpose();
  dyn.A.block<3, 3>(idx::kPosition, idx::kLinearVelocity) = Mat3::Identity();
  dyn.A(idx::kLinearVelocity + 2, idx::kGravity) = -1.0;

  for (int j = 0; j < kNumLegs; ++j) {
    const Vec3 lever = feet[j] - state.position;
    dyn.B.block<3, 3>(idx::kAngularVelocity, 3 * j) = inertia_world_inv * skew(lever);
    dyn.B.block<3, 3>(idx::kLinearVelocity, 3 * j) = Mat3::Identity() / params.mass;
  }
  return dyn;
}

std::pair<StateMat, InputMat> discretize(const StateMat& A_c, const InputMat& B_c, double dt,
                                         Discretization method) {
  if (!(dt > 0.0)) throw ParameterError("discretize: dt must be positive");
  if (!A_c.allFinite() || !B_c.allFinite()) throw InputError("discretize: non-finite matrices");

  if (method == Discretization::kForwardEuler) {
    return {StateMat::Identity() + A_c * dt, B_c * dt};
  }

  constexpr int n = kStateDim + kInputDim;
  Eigen::Matrix<double, n, n> aug = Eigen::Matrix<double, n, n>::Zero();
  aug.topLeftCorner<kStateDim, kStateDim>() = A_c * dt;
  aug.topRightCorner<kStateDim, kInputDim>() = B_c * dt;
  const Eigen::Matrix<double, n, n> e = aug.exp();
  return {e.topLeftCorner<kStateDim, kStateDim>(), e.topRightCorner<kStateDim, kInputDim>()};
}

}  // namespace quadqp::srbd
