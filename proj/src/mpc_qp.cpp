#include "quadqp/mpc_qp.hpp"

#include <cmath>
#include <string>

namespace quadqp::mpc {

using srbd::kInputDim;
using srbd::kNumLegs;
using srbd::kStateDim;

void GaitSequence::validate() const {
  if (horizon < 1) throw InputError("GaitSequence: horizon must be >= 1");
  if (!(dt > 0.0)) throw InputError("GaitSequence: dt must be positive");
  const auto n = static_cast<std::size_t>(horizon);
  if (contacts.size() != n || feet.size() != n || targets.size() != n) {
    throw DimensionError("GaitSequence: contacts/feet/targets must have N entries");
  }
  for (const auto& f : feet) {
    for (const auto& r : f) {
      if (!r.allFinite()) throw InputError("GaitSequence: non-finite foot position");
    }
  }
  for (const auto& t : targets) {
    if (!t.to_vector().allFinite()) throw InputError("GaitSequence: non-finite target");
  }
}

void MpcWeights::validate() const {
  if ((state.array() < 0.0).any() || !state.allFinite()) {
    throw ParameterError("MpcWeights: state weights must be finite and >= 0");
  }
  if (!(input > 0.0) || !std::isfinite(input)) {
    throw ParameterError("MpcWeights: input weight must be positive");
  }
}

Eigen::Matrix<double, 4, 3> friction_cone_rows(double mu) {
  if (!(mu >= 0.0)) throw ParameterError("friction_cone_rows: mu must be >= 0");
  Eigen::Matrix<double, 4, 3> rows;
  rows << 1.0, 0.0, -mu,
          -1.0, 0.0, -mu,
          0.0, 1.0, -mu,
          0.0, -1.0, -mu;
  return rows;
}

Dimensions count_dimensions(int N, int Np) {
  if (N < 1) throw InputError("count_dimensions: N must be >= 1");
  if (Np < 0 || Np > N) {
    throw InputError("count_dimensions: Np must lie in [0, N], got " + std::to_string(Np));
  }
  if (Np == 0) return {kInputDim * N, 0, kIneqPerStage * N};
  return {kStateDim * Np + kInputDim * N + kStateDim, kStateDim * Np + kStateDim,
          kIneqPerStage * N};
}

Eigen::Matrix<double, kInputDim, 1> balancing_forces(const srbd::FootPositions& feet,
                                                      const ContactFlags& contacts,
                                                      const Vec3& com, double weight) {
  Eigen::Matrix<double, kInputDim, 1> u = Eigen::Matrix<double, kInputDim, 1>::Zero();
  std::vector<int> stance;
  for (int j = 0; j < kNumLegs; ++j) {
    if (contacts[j]) stance.push_back(j);
  }
  if (stance.empty()) return u;

  const int m = 3 * static_cast<int>(stance.size());
  Mat grasp(6, m);
  for (std::size_t i = 0; i < stance.size(); ++i) {
    const int c = 3 * static_cast<int>(i);
    grasp.block<3, 3>(0, c) = Mat3::Identity();
    grasp.block<3, 3>(3, c) = skew(feet[stance[i]] - com);
  }
  Vec6 wrench = Vec6::Zero();
  wrench(2) = weight;
  const Vec f = grasp.completeOrthogonalDecomposition().solve(wrench);
  for (std::size_t i = 0; i < stance.size(); ++i) {
    u.segment<3>(3 * stance[i]) = f.segment<3>(3 * static_cast<int>(i));
  }
  return u;
}

StagewiseQp build_mpc_qp(const GaitSequence& gait, const srbd::SrbdState& current,
                         const srbd::SrbdParams& params, const MpcWeights& weights) {
  gait.validate();
  params.validate();
  weights.validate();
  if (std::abs(gait.dt - params.dt) > 1e-12) {
    throw InputError("build_mpc_qp: gait dt differs from params dt");
  }

  const int N = gait.horizon;
  const Eigen::Matrix<double, 4, 3> cone = friction_cone_rows(params.friction_coefficient);
  const Mat Qw = weights.state.asDiagonal();
  const double weight_force = params.mass * current.gravity;

  StagewiseQp qp;
  qp.x0 = current.to_vector();
  qp.stages.reserve(N + 1);

  srbd::StateMat A;
  for (int k = 0; k < N; ++k) {
    const auto cont = srbd::linearize_continuous(current, gait.feet[k], params);
    auto [Ad, Bd] = srbd::discretize(cont.A, cont.B, params.dt);
    if (k == 0) A = Ad;

    QpStage s = QpStage::zeros(kStateDim, kInputDim, kStateDim, kConeRowsPerLeg * kNumLegs);
    s.A = A;
    for (int j = 0; j < kNumLegs; ++j) {
      if (!gait.contacts[k][j]) Bd.middleCols<3>(3 * j).setZero();
    }
    s.B = Bd;

    if (k > 0) {
      const srbd::StateVec xd = gait.targets[k - 1].to_vector();
      s.Q = 2.0 * Qw;
      s.q = -2.0 * (Qw * xd);
      qp.constant += xd.dot(Qw * xd);
    }

    Eigen::Matrix<double, kInputDim, 1> u_ref = Eigen::Matrix<double, kInputDim, 1>::Zero();
    if (weights.force_reference == ForceReference::kWrenchBalance) {
      u_ref = balancing_forces(gait.feet[k], gait.contacts[k], current.position, weight_force);
    }
    s.R = 2.0 * weights.input * Mat::Identity(kInputDim, kInputDim);
    s.r = -2.0 * weights.input * u_ref;
    qp.constant += weights.input * u_ref.squaredNorm();

    for (int j = 0; j < kNumLegs; ++j) {
      if (gait.contacts[k][j]) {
        s.u_lo.segment<3>(3 * j) = params.force_min;
        s.u_hi.segment<3>(3 * j) = params.force_max;
      } else {
        s.u_lo.segment<3>(3 * j).setZero();
        s.u_hi.segment<3>(3 * j).setZero();
      }
      s.D.block<4, 3>(kConeRowsPerLeg * j, 3 * j) = cone;
    }
    s.hi.setZero();
    qp.stages.push_back(std::move(s));
  }

  QpStage terminal = QpStage::zeros(kStateDim, 0, 0, 0);
  const srbd::StateVec xd = gait.targets[N - 1].to_vector();
  terminal.Q = 2.0 * Qw;
  terminal.q = -2.0 * (Qw * xd);
  qp.constant += xd.dot(Qw * xd);
  qp.stages.push_back(std::move(terminal));
  return qp;
}

}  // namespace quadqp::mpc
