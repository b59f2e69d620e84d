#pragma once

#include "quadqp/mpc_qp.hpp"

#include <random>

namespace quadqp::oracle {

inline srbd::FootPositions nominal_feet(const Vec3& com, double yaw = 0.0) {
  const Mat3 R = rot_z(yaw);
  srbd::FootPositions f;
  const double hx = 0.19, hy = 0.11;
  f[0] = com + R * Vec3(hx, hy, 0.0);
  f[1] = com + R * Vec3(hx, -hy, 0.0);
  f[2] = com + R * Vec3(-hx, hy, 0.0);
  f[3] = com + R * Vec3(-hx, -hy, 0.0);
  for (auto& p : f) p.z() = 0.0;
  return f;
}

// Random feasible MPC instance: perturbed standing/trotting plan around a
// nominal height with random targets. Every stage keeps at least two legs in
// stance so the force bounds are satisfiable.
inline mpc::GaitSequence random_gait(std::mt19937& rng, int N, srbd::SrbdState& current) {
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  current = srbd::SrbdState{};
  current.position = Vec3(0.1 * ud(rng), 0.1 * ud(rng), 0.3 + 0.02 * ud(rng));
  current.orientation = Vec3(0.05 * ud(rng), 0.05 * ud(rng), 0.5 * ud(rng));
  current.linear_velocity = Vec3(0.3 * ud(rng), 0.3 * ud(rng), 0.05 * ud(rng));
  current.angular_velocity = Vec3(0.1 * ud(rng), 0.1 * ud(rng), 0.2 * ud(rng));

  mpc::GaitSequence g;
  g.horizon = N;
  g.dt = 0.02;
  const bool trot = coin(rng);
  const int phase = static_cast<int>(std::abs(ud(rng)) * 5);
  for (int k = 0; k < N; ++k) {
    mpc::ContactFlags c{true, true, true, true};
    if (trot) {
      const bool a = ((k + phase) / 5) % 2 == 0;
      c = {a, !a, !a, a};
    }
    g.contacts.push_back(c);
    auto feet = nominal_feet(current.position, current.yaw());
    for (auto& p : feet) p += Vec3(0.03 * ud(rng), 0.03 * ud(rng), 0.0);
    g.feet.push_back(feet);
    srbd::SrbdState t;
    t.position = current.position + Vec3(0.2 * ud(rng), 0.2 * ud(rng), 0.02 * ud(rng));
    t.orientation = Vec3(0.05 * ud(rng), 0.05 * ud(rng), current.yaw() + 0.1 * ud(rng));
    t.linear_velocity = Vec3(0.3 * ud(rng), 0.3 * ud(rng), 0.0);
    t.angular_velocity = Vec3(0.0, 0.0, 0.2 * ud(rng));
    g.targets.push_back(t);
  }
  return g;
}

inline StagewiseQp random_mpc_qp(std::mt19937& rng, int N) {
  srbd::SrbdState cur;
  const auto gait = random_gait(rng, N, cur);
  return mpc::build_mpc_qp(gait, cur, srbd::SrbdParams{});
}

}  // namespace quadqp::oracle
