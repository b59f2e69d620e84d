#include "quadqp/kkt.hpp"

#include <algorithm>
#include <cmath>

namespace quadqp {

namespace {

struct RangeTally {
  double primal = 0.0;
  double dual = 0.0;
  double comp = 0.0;

  void add(double v, double lo, double hi, double z) {
    primal = std::max({primal, lo - v, v - hi});
    if (z > 0.0) {
      if (std::isfinite(hi)) {
        comp = std::max(comp, std::abs(z * (hi - v)));
      } else {
        dual = std::max(dual, z);
      }
    } else if (z < 0.0) {
      if (std::isfinite(lo)) {
        comp = std::max(comp, std::abs(z * (v - lo)));
      } else {
        dual = std::max(dual, -z);
      }
    }
  }
};

double inf_norm(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

KktResiduals kkt_residuals(const DenseQp& qp, const Vec& x, const Vec& y, const Vec& z,
                           const Vec& z_box) {
  require_dims(x.size() == qp.num_vars() && y.size() == qp.num_eq() &&
                   z.size() == qp.num_general() && z_box.size() == qp.num_vars(),
               "kkt_residuals: dimension mismatch");
  KktResiduals r;
  Vec grad = qp.H * x + qp.g + z_box;
  if (qp.num_eq() > 0) grad.noalias() += qp.A_eq.transpose() * y;
  if (qp.num_general() > 0) grad.noalias() += qp.C.transpose() * z;
  r.stationarity = inf_norm(grad);

  RangeTally t;
  if (qp.num_eq() > 0) t.primal = inf_norm(qp.A_eq * x - qp.b_eq);
  const Vec cx = qp.C * x;
  for (int i = 0; i < qp.num_general(); ++i) t.add(cx(i), qp.c_lo(i), qp.c_hi(i), z(i));
  for (int j = 0; j < qp.num_vars(); ++j) t.add(x(j), qp.x_lo(j), qp.x_hi(j), z_box(j));
  r.primal = std::max(0.0, t.primal);
  r.dual = t.dual;
  r.complementarity = t.comp;
  return r;
}

KktResiduals kkt_residuals(const StagewiseQp& qp, const Vec& x, const Vec& y, const Vec& z,
                           const Vec& z_box) {
  int ng_total = 0;
  for (const auto& s : qp.stages) ng_total += s.ng();
  require_dims(x.size() == qp.num_vars() && y.size() == qp.num_eq() && z.size() == ng_total &&
                   z_box.size() == qp.num_vars(),
               "kkt_residuals: dimension mismatch");

  const int N = qp.horizon();
  KktResiduals r;
  RangeTally t;
  int xo = 0, yo = 0, go = 0;
  const int nx0 = qp.stages[0].nx();
  const Vec y_init = y.head(nx0);
  t.primal = inf_norm(x.head(nx0) - qp.x0);
  yo = nx0;
  int y_prev = -1;  // offset of y_{k-1}

  for (int k = 0; k <= N; ++k) {
    const auto& s = qp.stages[k];
    const int nx = s.nx(), nu = s.nu(), ng = s.ng();
    const auto xk = x.segment(xo, nx);
    const auto uk = x.segment(xo + nx, nu);
    const auto zk = z.segment(go, ng);

    Vec gx = s.Q * xk + s.q + z_box.segment(xo, nx);
    Vec gu = s.R * uk + s.S * xk + s.r + z_box.segment(xo + nx, nu);
    if (nu > 0) gx.noalias() += s.S.transpose() * uk;
    if (ng > 0) {
      gx.noalias() += s.C.transpose() * zk;
      gu.noalias() += s.D.transpose() * zk;
    }
    if (k == 0) gx += y_init;
    if (y_prev >= 0) gx -= y.segment(y_prev, nx);
    if (k < N) {
      const int nxn = qp.stages[k + 1].nx();
      const auto yk = y.segment(yo, nxn);
      gx.noalias() += s.A.transpose() * yk;
      gu.noalias() += s.B.transpose() * yk;
      const auto xn = x.segment(xo + nx + nu, nxn);
      t.primal = std::max(t.primal, inf_norm(s.A * xk + s.B * uk + s.b - xn));
      y_prev = yo;
      yo += nxn;
    }
    r.stationarity = std::max({r.stationarity, inf_norm(gx), inf_norm(gu)});

    if (ng > 0) {
      const Vec v = s.C * xk + s.D * uk;
      for (int i = 0; i < ng; ++i) t.add(v(i), s.lo(i), s.hi(i), zk(i));
    }
    for (int i = 0; i < nu; ++i) t.add(uk(i), s.u_lo(i), s.u_hi(i), z_box(xo + nx + i));
    for (int i = 0; i < nx; ++i) {
      const double zb = z_box(xo + i);
      t.dual = std::max(t.dual, std::abs(zb));
    }
    xo += nx + nu;
    go += ng;
  }
  r.primal = std::max(0.0, t.primal);
  r.dual = t.dual;
  r.complementarity = t.comp;
  return r;
}

}  // namespace quadqp
