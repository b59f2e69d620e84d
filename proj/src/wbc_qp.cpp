#include "quadqp/wbc_qp.hpp"

#include "json_util.hpp"

#include <fstream>
#include <sstream>

namespace quadqp::wbc {

using detail::json;

void DynamicsSnapshot::validate() const {
  require_dims(n_v > 0, "snapshot: n_v must be positive");
  require_dims(H.rows() == n_v && H.cols() == n_v, "snapshot: H must be n_v x n_v");
  require_dims(h.size() == n_v, "snapshot: h size");
  require_dims(Jc.cols() == n_v || Jc.rows() == 0, "snapshot: Jc columns");
  require_dims(Jc.rows() % 3 == 0, "snapshot: Jc rows must come in xyz triplets");
  require_dims(jdot_qdot_c.size() == Jc.rows(), "snapshot: jdot_qdot_c size");
  require_dims(S.rows() == n_v && S.cols() <= n_v, "snapshot: S must be n_v x n_a");
  require_dims(tau_min.size() == S.cols() && tau_max.size() == S.cols(), "snapshot: torque bound sizes");
  if (!H.allFinite() || !h.allFinite() || !Jc.allFinite() || !jdot_qdot_c.allFinite() || !S.allFinite()) {
    throw InputError("snapshot: non-finite data");
  }
  if ((tau_min.array() > tau_max.array()).any() || tau_min.hasNaN() || tau_max.hasNaN()) {
    throw InputError("snapshot: tau_min > tau_max");
  }
  if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + H.cwiseAbs().maxCoeff())) {
    throw InputError("snapshot: H not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(H, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < 1e-9) throw InputError("snapshot: H not positive definite");
  if (S.cols() > 0) {
    Eigen::ColPivHouseholderQR<Mat> qr(S);
    qr.setThreshold(1e-10);
    if (qr.rank() < S.cols()) throw InputError("snapshot: S lacks full column rank");
  }
  for (const auto& t : tasks) {
    require_dims(t.J.rows() == 6 && t.J.cols() == n_v, "snapshot: task '" + t.name + "' J must be 6 x n_v");
    require_dims(t.jdot_qdot.size() == 6, "snapshot: task '" + t.name + "' drift size");
    if (!t.J.allFinite() || !t.jdot_qdot.allFinite()) throw InputError("snapshot: task '" + t.name + "' non-finite");
    if (!(t.weight >= 0.0)) throw ParameterError("snapshot: task '" + t.name + "' weight must be >= 0");
  }
}

void WbcCommand::validate(const DynamicsSnapshot& snap) const {
  require_dims(task_accelerations.size() == snap.tasks.size(), "command: one acceleration per task");
  for (const auto& a : task_accelerations) require_dims(a.size() == 6, "command: task accelerations are 6-vectors");
  require_dims(desired_forces.size() == snap.num_contact_rows(), "command: desired_forces size");
  require_dims(force_weights.size() == snap.num_contact_rows(), "command: force_weights size");
  for (const auto& a : task_accelerations) {
    if (!a.allFinite()) throw InputError("command: non-finite task acceleration");
  }
  if (!desired_forces.allFinite() || !force_weights.allFinite()) throw InputError("command: non-finite data");
  if ((force_weights.array() < 0.0).any()) throw ParameterError("command: negative force weight");
}

namespace {

Mat selection_pinv(const Mat& S) {
  return (S.transpose() * S).ldlt().solve(S.transpose());
}

// Shared cost, friction-cone rows and contact rows over [q̈, u, ...].
DenseQp common_part(const DynamicsSnapshot& snap, const WbcCommand& cmd, double mu, int n, int n_eq,
                    int n_extra_rows) {
  snap.validate();
  cmd.validate(snap);
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw ParameterError("friction coefficient must be >= 0");
  const int nv = snap.n_v;
  const int nu = snap.num_contact_rows();
  const int nc = snap.num_contacts();

  DenseQp qp = DenseQp::with_dims(n, n_eq, 4 * nc + n_extra_rows);
  for (std::size_t i = 0; i < snap.tasks.size(); ++i) {
    const auto& t = snap.tasks[i];
    const Vec e = t.jdot_qdot - cmd.task_accelerations[i];
    qp.H.topLeftCorner(nv, nv) += 2.0 * t.weight * t.J.transpose() * t.J;
    qp.g.head(nv) += 2.0 * t.weight * t.J.transpose() * e;
    qp.constant += t.weight * e.squaredNorm();
  }
  const Vec w2 = cmd.force_weights.array().square();
  qp.H.block(nv, nv, nu, nu).diagonal() = 2.0 * w2;
  qp.g.segment(nv, nu) = -2.0 * w2.cwiseProduct(cmd.desired_forces);
  qp.constant += w2.dot(cmd.desired_forces.cwiseAbs2());

  for (int j = 0; j < nc; ++j) {
    const int c = nv + 3 * j;
    const double sx[4] = {1.0, -1.0, 0.0, 0.0};
    const double sy[4] = {0.0, 0.0, 1.0, -1.0};
    for (int r = 0; r < 4; ++r) {
      const int row = 4 * j + r;
      qp.C(row, c) = sx[r];
      qp.C(row, c + 1) = sy[r];
      qp.C(row, c + 2) = -mu;
      qp.c_hi(row) = 0.0;
    }
  }
  // contact rows: J_c q̈ = −J̇_c q̇, after the dynamics rows
  const int r0 = n_eq - nu;
  qp.A_eq.block(r0, 0, nu, nv) = snap.Jc;
  qp.b_eq.segment(r0, nu) = -snap.jdot_qdot_c;
  return qp;
}

bool rank_deficient(const Mat& Jc) {
  if (Jc.rows() == 0) return false;
  Eigen::ColPivHouseholderQR<Mat> qr(Jc.transpose());
  qr.setThreshold(1e-10);
  return qr.rank() < Jc.rows();
}

}  // namespace

WbcProblem build_reduced_tsid(const DynamicsSnapshot& snap, const WbcCommand& cmd, double mu) {
  const int nv = snap.n_v;
  const int nu = snap.num_contact_rows();
  const int na = snap.num_actuated();
  const int n_free = nv - na;
  WbcProblem p;
  p.n_v = nv;
  p.n_u = nu;
  p.qp = common_part(snap, cmd, mu, nv + nu, n_free + nu, na);
  p.contact_rank_deficient = rank_deficient(snap.Jc);

  // unactuated rows: N_Sᵀ (H q̈ + h − J_cᵀ u) = 0 with N_S spanning ker Sᵀ
  Eigen::HouseholderQR<Mat> qr(snap.S);
  const Mat Q = qr.householderQ() * Mat::Identity(nv, nv);
  const Mat Ns = Q.rightCols(n_free);
  p.qp.A_eq.block(0, 0, n_free, nv) = Ns.transpose() * snap.H;
  p.qp.A_eq.block(0, nv, n_free, nu) = -Ns.transpose() * snap.Jc.transpose();
  p.qp.b_eq.head(n_free) = -Ns.transpose() * snap.h;

  // torque limits through τ = S⁺ (H q̈ + h − J_cᵀ u)
  const Mat Sp = selection_pinv(snap.S);
  const int r0 = 4 * snap.num_contacts();
  p.qp.C.block(r0, 0, na, nv) = Sp * snap.H;
  p.qp.C.block(r0, nv, na, nu) = -Sp * snap.Jc.transpose();
  const Vec offset = Sp * snap.h;
  p.qp.c_lo.segment(r0, na) = snap.tau_min - offset;
  p.qp.c_hi.segment(r0, na) = snap.tau_max - offset;
  return p;
}

WbcProblem build_full_tsid(const DynamicsSnapshot& snap, const WbcCommand& cmd, double mu) {
  const int nv = snap.n_v;
  const int nu = snap.num_contact_rows();
  const int na = snap.num_actuated();
  WbcProblem p;
  p.n_v = nv;
  p.n_u = nu;
  p.n_tau = na;
  p.qp = common_part(snap, cmd, mu, nv + nu + na, nv + nu, 0);
  p.contact_rank_deficient = rank_deficient(snap.Jc);

  p.qp.A_eq.block(0, 0, nv, nv) = snap.H;
  p.qp.A_eq.block(0, nv, nv, nu) = -snap.Jc.transpose();
  p.qp.A_eq.block(0, nv + nu, nv, na) = -snap.S;
  p.qp.b_eq.head(nv) = -snap.h;
  p.qp.x_lo.tail(na) = snap.tau_min;
  p.qp.x_hi.tail(na) = snap.tau_max;
  return p;
}

Vec recover_torques(const Vec& qdd, const Vec& u, const DynamicsSnapshot& snap) {
  require_dims(qdd.size() == snap.n_v, "recover_torques: qdd size");
  require_dims(u.size() == snap.num_contact_rows(), "recover_torques: u size");
  Vec r = snap.H * qdd + snap.h;
  if (u.size() > 0) r -= snap.Jc.transpose() * u;
  return selection_pinv(snap.S) * r;
}

double wbc_cost(const DynamicsSnapshot& snap, const WbcCommand& cmd, const Vec& qdd, const Vec& u) {
  cmd.validate(snap);
  double c = 0.0;
  for (std::size_t i = 0; i < snap.tasks.size(); ++i) {
    const auto& t = snap.tasks[i];
    c += t.weight * (t.J * qdd + t.jdot_qdot - cmd.task_accelerations[i]).squaredNorm();
  }
  return c + cmd.force_weights.cwiseProduct(cmd.desired_forces - u).squaredNorm();
}

Vec6 pd_task_acceleration(const Vec6& pos_err, const Vec6& vel_err, double kp, double kd, const Vec6& feedforward) {
  if (!(kp >= 0.0) || !(kd >= 0.0)) throw ParameterError("PD gains must be >= 0");
  return kp * pos_err + kd * vel_err + feedforward;
}

DynamicsSnapshot make_toy_snapshot(const ToyConfig& config) {
  if (!(config.base_mass > 0.0) || !(config.foot_mass > 0.0) || !(config.base_inertia.minCoeff() > 0.0)) {
    throw ParameterError("toy model: masses and inertia must be positive");
  }
  if (!(config.torque_limit > 0.0)) throw ParameterError("toy model: torque limit must be positive");
  const Mat3 R = rot_z(config.yaw);
  const Vec3& p = config.base_position;
  std::array<Vec3, 4> hips;
  for (int j = 0; j < 4; ++j) hips[j] = p + R * config.hip_offsets[j];

  DynamicsSnapshot s;
  s.n_v = 18;
  s.H = Mat::Zero(18, 18);
  s.H.block<3, 3>(0, 0) = config.base_mass * Mat3::Identity();
  const Mat3 I_world = R * config.base_inertia.asDiagonal() * R.transpose();
  s.H.block<3, 3>(3, 3) = 0.5 * (I_world + I_world.transpose());
  s.H.block(6, 6, 12, 12) = config.foot_mass * Mat::Identity(12, 12);
  s.h = Vec::Zero(18);
  s.h(2) = config.base_mass * config.gravity;
  for (int j = 0; j < 4; ++j) s.h(6 + 3 * j + 2) = config.foot_mass * config.gravity;

  // each leg pushes its foot with +τ_j and the base at the hip with −τ_j
  s.S = Mat::Zero(18, 12);
  for (int j = 0; j < 4; ++j) {
    s.S.block<3, 3>(0, 3 * j) = -Mat3::Identity();
    s.S.block<3, 3>(3, 3 * j) = -skew(hips[j] - p);
    s.S.block<3, 3>(6 + 3 * j, 3 * j) = Mat3::Identity();
  }
  s.tau_min = Vec::Constant(12, -config.torque_limit);
  s.tau_max = Vec::Constant(12, config.torque_limit);

  int nc = 0;
  for (bool c : config.contacts) nc += c ? 1 : 0;
  s.Jc = Mat::Zero(3 * nc, 18);
  s.jdot_qdot_c = Vec::Zero(3 * nc);
  for (int j = 0, r = 0; j < 4; ++j) {
    if (!config.contacts[j]) continue;
    s.Jc.block<3, 3>(3 * r, 6 + 3 * j) = Mat3::Identity();
    ++r;
  }

  Task body{"body", Mat::Zero(6, 18), Vec::Zero(6), config.body_weight};
  body.J.leftCols(6) = Mat::Identity(6, 6);
  Task front{"feet_front", Mat::Zero(6, 18), Vec::Zero(6), config.feet_weight};
  front.J.block(0, 6, 6, 6) = Mat::Identity(6, 6);
  Task rear{"feet_rear", Mat::Zero(6, 18), Vec::Zero(6), config.feet_weight};
  rear.J.block(0, 12, 6, 6) = Mat::Identity(6, 6);
  s.tasks = {body, front, rear};
  s.validate();
  return s;
}

DynamicsSnapshot random_snapshot(std::mt19937& rng, double mu, double torque_limit) {
  if (!(mu > 0.0)) throw ParameterError("random_snapshot: mu must be positive");
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  auto randn = [&](int r, int c) {
    Mat m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = nd(rng);
    return m;
  };
  const int nv = 18, na = 12, nc = 4;
  DynamicsSnapshot s;
  s.n_v = nv;
  const Mat L = randn(nv, nv);
  s.H = L * L.transpose() / nv + 0.1 * Mat::Identity(nv, nv);
  s.S = randn(nv, na);
  s.Jc = randn(3 * nc, nv);
  s.tau_min = Vec::Constant(na, -torque_limit);
  s.tau_max = Vec::Constant(na, torque_limit);

  // feasible point with forces strictly inside the friction pyramid
  Vec u(3 * nc);
  for (int j = 0; j < nc; ++j) {
    const double fz = 20.0 + 60.0 * ud(rng);
    u(3 * j) = 0.5 * mu * fz * (2.0 * ud(rng) - 1.0);
    u(3 * j + 1) = 0.5 * mu * fz * (2.0 * ud(rng) - 1.0);
    u(3 * j + 2) = fz;
  }
  const Vec qdd = randn(nv, 1);
  const Vec tau = 5.0 * randn(na, 1);
  s.jdot_qdot_c = -s.Jc * qdd;
  s.h = s.Jc.transpose() * u - s.H * qdd + s.S * tau;
  for (int i = 0; i < 3; ++i) {
    s.tasks.push_back({"task" + std::to_string(i), randn(6, nv), randn(6, 1), 0.5 + 1.5 * ud(rng)});
  }
  s.validate();
  return s;
}

DynamicsSnapshot parse_snapshot(const std::string& json_text) {
  using namespace detail;
  const json j = parse_json(json_text);
  DynamicsSnapshot s;
  s.n_v = int_field(j, "n_v");
  if (s.n_v == 0) throw InputError("snapshot: n_v must be positive");
  s.H = mat_from_json(field(j, "H"), s.n_v, s.n_v, "H");
  s.h = vec_from_json(field(j, "h"), "h", std::nan(""));
  s.Jc = mat_from_json_cols(field(j, "Jc"), s.n_v, "Jc");
  if (s.Jc.size() == 0) s.Jc = Mat(0, s.n_v);
  s.jdot_qdot_c = vec_from_json(field(j, "jdot_qdot_c"), "jdot_qdot_c", std::nan(""));
  const Vec tau_min = vec_from_json(field(j, "tau_min"), "tau_min", -kInf);
  const Vec tau_max = vec_from_json(field(j, "tau_max"), "tau_max", kInf);
  s.tau_min = tau_min;
  s.tau_max = tau_max;
  s.S = mat_from_json(field(j, "S"), s.n_v, static_cast<int>(tau_min.size()), "S");
  const json& tasks = field(j, "tasks");
  if (!tasks.is_array()) throw InputError("snapshot: 'tasks' must be an array");
  for (const auto& t : tasks) {
    Task task;
    const json& name = field(t, "name");
    if (!name.is_string()) throw InputError("snapshot: task name must be a string");
    task.name = name.get<std::string>();
    task.J = mat_from_json(field(t, "J"), 6, s.n_v, "J");
    task.jdot_qdot = vec_from_json(field(t, "jdot_qdot"), "jdot_qdot", std::nan(""));
    const json& w = field(t, "weight");
    if (!w.is_number()) throw InputError("snapshot: task weight must be a number");
    task.weight = w.get<double>();
    s.tasks.push_back(std::move(task));
  }
  s.validate();
  return s;
}

DynamicsSnapshot load_snapshot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open snapshot file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_snapshot(ss.str());
}

std::string snapshot_to_json(const DynamicsSnapshot& snap) {
  using detail::to_json;
  json j;
  j["n_v"] = snap.n_v;
  j["H"] = to_json(snap.H);
  j["h"] = to_json(snap.h);
  j["Jc"] = to_json(snap.Jc);
  j["jdot_qdot_c"] = to_json(snap.jdot_qdot_c);
  j["S"] = to_json(snap.S);
  j["tau_min"] = to_json(snap.tau_min);
  j["tau_max"] = to_json(snap.tau_max);
  j["tasks"] = json::array();
  for (const auto& t : snap.tasks) {
    j["tasks"].push_back({{"name", t.name}, {"J", to_json(t.J)}, {"jdot_qdot", to_json(t.jdot_qdot)},
                          {"weight", t.weight}});
  }
  return j.dump();
}

}  // namespace quadqp::wbc
