#include "quadqp/qp_types.hpp"

#include <algorithm>
#include <cmath>

namespace quadqp {

QpStage QpStage::zeros(int nx, int nu, int nx_next, int ng) {
  QpStage s;
  s.A = Mat::Zero(nx_next, nx);
  s.B = Mat::Zero(nx_next, nu);
  s.b = Vec::Zero(nx_next);
  s.Q = Mat::Zero(nx, nx);
  s.S = Mat::Zero(nu, nx);
  s.R = Mat::Zero(nu, nu);
  s.q = Vec::Zero(nx);
  s.r = Vec::Zero(nu);
  s.u_lo = Vec::Constant(nu, -kInf);
  s.u_hi = Vec::Constant(nu, kInf);
  s.C = Mat::Zero(ng, nx);
  s.D = Mat::Zero(ng, nu);
  s.lo = Vec::Constant(ng, -kInf);
  s.hi = Vec::Constant(ng, kInf);
  return s;
}

int StagewiseQp::num_vars() const {
  int n = 0;
  for (const auto& s : stages) n += s.nx() + s.nu();
  return n;
}

int StagewiseQp::num_eq() const {
  if (stages.empty()) return 0;
  int n = stages.front().nx();
  for (std::size_t k = 0; k + 1 < stages.size(); ++k) n += static_cast<int>(stages[k].A.rows());
  return n;
}

int StagewiseQp::num_ineq() const {
  int n = 0;
  for (const auto& s : stages) {
    for (int i = 0; i < s.nu(); ++i) {
      if (std::isfinite(s.u_lo(i)) || std::isfinite(s.u_hi(i))) ++n;
    }
    n += s.ng();
  }
  return n;
}

void StagewiseQp::validate() const {
  require_dims(!stages.empty(), "StagewiseQp: no stages");
  require_dims(x0.size() == stages.front().nx(), "StagewiseQp: x0 size");
  const int N = horizon();
  for (int k = 0; k <= N; ++k) {
    const auto& s = stages[k];
    const int nx = s.nx(), nu = s.nu(), ng = s.ng();
    require_dims(s.Q.cols() == nx && s.q.size() == nx, "StagewiseQp: Q/q dims");
    require_dims(s.R.cols() == nu && s.r.size() == nu, "StagewiseQp: R/r dims");
    require_dims(s.S.rows() == nu && s.S.cols() == nx, "StagewiseQp: S dims");
    require_dims(s.u_lo.size() == nu && s.u_hi.size() == nu, "StagewiseQp: box dims");
    require_dims(s.C.cols() == nx && s.D.rows() == ng && s.D.cols() == nu, "StagewiseQp: C/D dims");
    require_dims(s.lo.size() == ng && s.hi.size() == ng, "StagewiseQp: general bound dims");
    if (k < N) {
      const int nx_next = stages[k + 1].nx();
      require_dims(s.A.rows() == nx_next && s.A.cols() == nx, "StagewiseQp: A dims");
      require_dims(s.B.rows() == nx_next && s.B.cols() == nu, "StagewiseQp: B dims");
      require_dims(s.b.size() == nx_next, "StagewiseQp: b dims");
    } else {
      require_dims(nu == 0, "StagewiseQp: terminal stage must have no inputs");
    }
    if ((s.u_lo.array() > s.u_hi.array()).any() || (s.lo.array() > s.hi.array()).any()) {
      throw InputError("StagewiseQp: lower bound above upper bound");
    }
  }
}

int DenseQp::num_ineq() const {
  int n = num_general();
  for (int i = 0; i < x_lo.size(); ++i) {
    if (std::isfinite(x_lo(i)) || std::isfinite(x_hi(i))) ++n;
  }
  return n;
}

double DenseQp::objective(const Vec& x) const {
  return 0.5 * x.dot(H * x) + g.dot(x) + constant;
}

DenseQp DenseQp::with_dims(int n, int n_eq, int n_ineq) {
  DenseQp qp;
  qp.H = Mat::Zero(n, n);
  qp.g = Vec::Zero(n);
  qp.A_eq = Mat::Zero(n_eq, n);
  qp.b_eq = Vec::Zero(n_eq);
  qp.C = Mat::Zero(n_ineq, n);
  qp.c_lo = Vec::Constant(n_ineq, -kInf);
  qp.c_hi = Vec::Constant(n_ineq, kInf);
  qp.x_lo = Vec::Constant(n, -kInf);
  qp.x_hi = Vec::Constant(n, kInf);
  return qp;
}

void DenseQp::validate() const {
  const int n = num_vars();
  require_dims(H.cols() == n && g.size() == n, "DenseQp: H/g dims");
  require_dims(A_eq.cols() == n && b_eq.size() == A_eq.rows(), "DenseQp: equality dims");
  require_dims(C.cols() == n && c_lo.size() == C.rows() && c_hi.size() == C.rows(),
               "DenseQp: inequality dims");
  require_dims(x_lo.size() == n && x_hi.size() == n, "DenseQp: bound dims");
  if ((c_lo.array() > c_hi.array()).any() || (x_lo.array() > x_hi.array()).any()) {
    throw InputError("DenseQp: lower bound above upper bound");
  }
  if (!H.allFinite() || !g.allFinite() || !A_eq.allFinite() || !b_eq.allFinite() || !C.allFinite()) {
    throw InputError("DenseQp: non-finite data");
  }
  if (n > 0 && (H - H.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + H.cwiseAbs().maxCoeff())) {
    throw InputError("DenseQp: H not symmetric");
  }
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kMaxIter: return "max_iter";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kNumericalFailure: return "numerical_failure";
  }
  return "numerical_failure";
}

SolveStatus status_from_string(const std::string& s) {
  if (s == "optimal") return SolveStatus::kOptimal;
  if (s == "max_iter") return SolveStatus::kMaxIter;
  if (s == "infeasible") return SolveStatus::kInfeasible;
  if (s == "numerical_failure") return SolveStatus::kNumericalFailure;
  throw InputError("unknown solve status: " + s);
}

double KktResiduals::max() const {
  return std::max({stationarity, primal, dual, complementarity});
}

WarmStart QpSolution::as_warm_start() const {
  WarmStart ws;
  ws.primal = primal;
  ws.eq_duals = eq_duals;
  ws.ineq_duals = ineq_duals;
  ws.box_duals = box_duals;
  ws.active_set = active_set;
  return ws;
}

std::string to_string(Preset p) { return p == Preset::kSpeed ? "speed" : "balance"; }

Preset preset_from_string(const std::string& s) {
  if (s == "balance") return Preset::kBalance;
  if (s == "speed") return Preset::kSpeed;
  throw InputError("unknown preset: " + s);
}

SolverSettings SolverSettings::from_preset(Preset p) {
  SolverSettings s;
  s.preset = p;
  if (p == Preset::kSpeed) {
    s.tolerance = 1e-4;
    s.max_iterations = 25;
  } else {
    s.tolerance = 1e-8;
    s.max_iterations = 100;
  }
  return s;
}

DenseQp flatten(const StagewiseQp& qp) {
  qp.validate();
  const int N = qp.horizon();
  const int n = qp.num_vars();
  const int n_eq = qp.num_eq();
  int n_gen = 0;
  for (const auto& s : qp.stages) n_gen += s.ng();

  DenseQp d = DenseQp::with_dims(n, n_eq, n_gen);
  d.constant = qp.constant;

  std::vector<int> x_off(N + 1), u_off(N + 1);
  int off = 0;
  for (int k = 0; k <= N; ++k) {
    x_off[k] = off;
    off += qp.stages[k].nx();
    u_off[k] = off;
    off += qp.stages[k].nu();
  }

  const int nx0 = qp.stages[0].nx();
  d.A_eq.block(0, 0, nx0, nx0).setIdentity();
  d.b_eq.head(nx0) = qp.x0;

  int eq_row = nx0;
  int g_row = 0;
  for (int k = 0; k <= N; ++k) {
    const auto& s = qp.stages[k];
    const int nx = s.nx(), nu = s.nu(), ng = s.ng();
    const int xo = x_off[k], uo = u_off[k];
    d.H.block(xo, xo, nx, nx) = s.Q;
    d.H.block(uo, uo, nu, nu) = s.R;
    d.H.block(uo, xo, nu, nx) = s.S;
    d.H.block(xo, uo, nx, nu) = s.S.transpose();
    d.g.segment(xo, nx) = s.q;
    d.g.segment(uo, nu) = s.r;
    d.x_lo.segment(uo, nu) = s.u_lo;
    d.x_hi.segment(uo, nu) = s.u_hi;

    d.C.block(g_row, xo, ng, nx) = s.C;
    d.C.block(g_row, uo, ng, nu) = s.D;
    d.c_lo.segment(g_row, ng) = s.lo;
    d.c_hi.segment(g_row, ng) = s.hi;
    g_row += ng;

    if (k < N) {
      const int nxn = qp.stages[k + 1].nx();
      d.A_eq.block(eq_row, xo, nxn, nx) = s.A;
      d.A_eq.block(eq_row, uo, nxn, nu) = s.B;
      d.A_eq.block(eq_row, x_off[k + 1], nxn, nxn) = -Mat::Identity(nxn, nxn);
      d.b_eq.segment(eq_row, nxn) = -s.b;
      eq_row += nxn;
    }
  }
  return d;
}

double stagewise_objective(const StagewiseQp& qp, const std::vector<Vec>& x,
                           const std::vector<Vec>& u) {
  double f = qp.constant;
  for (int k = 0; k <= qp.horizon(); ++k) {
    const auto& s = qp.stages[k];
    f += 0.5 * x[k].dot(s.Q * x[k]) + s.q.dot(x[k]);
    if (s.nu() > 0) {
      f += u[k].dot(s.S * x[k]) + 0.5 * u[k].dot(s.R * u[k]) + s.r.dot(u[k]);
    }
  }
  return f;
}

}  // namespace quadqp
