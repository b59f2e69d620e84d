#include "quadqp/kkt.hpp"
#include "quadqp/solvers.hpp"

#include "reduced_qp.hpp"
#include "solver_common.hpp"

#include <algorithm>
#include <cmath>

namespace quadqp {

namespace {

using detail::inf_norm;
using detail::max_step;

// Stage data after eliminating inputs with equal bounds. Inequalities are
// one-sided: dense rows Gx x + Gu u ≤ h, and signed unit rows on free inputs.
struct Stage {
  int nx = 0, nu = 0;
  std::vector<int> free, fixed;
  Vec fixed_values;
  Mat A, B;
  Vec b;
  Mat Q, S, R;
  Vec q, r;
  Mat Gx, Gu;
  Vec h;
  std::vector<int> src_row;    // original general row
  std::vector<double> src_side;  // +1 upper, -1 lower
  bool state_rows = false;
  std::vector<int> box_var;
  std::vector<double> box_sign;
  Vec box_h;

  [[nodiscard]] int md() const { return static_cast<int>(Gx.rows()); }
  [[nodiscard]] int mb() const { return static_cast<int>(box_var.size()); }
  [[nodiscard]] int m() const { return md() + mb(); }

  [[nodiscard]] Vec values(const Vec& x, const Vec& u) const {
    Vec v(m());
    if (md() > 0) {
      v.head(md()) = Gu * u;
      if (state_rows) v.head(md()) += Gx * x;
    }
    for (int i = 0; i < mb(); ++i) v(md() + i) = box_sign[i] * u(box_var[i]);
    return v;
  }
  void add_x_transpose(const Vec& l, Vec& out) const {
    if (md() > 0 && state_rows) out.noalias() += Gx.transpose() * l.head(md());
  }
  void add_u_transpose(const Vec& l, Vec& out) const {
    if (md() > 0) out.noalias() += Gu.transpose() * l.head(md());
    for (int i = 0; i < mb(); ++i) out(box_var[i]) += box_sign[i] * l(md() + i);
  }
};

bool equal_bounds(double lo, double hi) {
  return std::isfinite(lo) && std::isfinite(hi) && hi - lo <= 1e-14 * (1.0 + std::abs(lo));
}

// Returns the id of a violated row with vanishing coefficients, if any.
std::optional<ConstraintId> build_stage(const QpStage& s, int general_offset, double feas_tol,
                                        Stage& out) {
  std::optional<ConstraintId> infeasible;
  out.nx = s.nx();
  const int nu = s.nu();
  for (int j = 0; j < nu; ++j) {
    (equal_bounds(s.u_lo(j), s.u_hi(j)) ? out.fixed : out.free).push_back(j);
  }
  out.nu = static_cast<int>(out.free.size());
  const int nX = static_cast<int>(out.fixed.size());
  out.fixed_values.resize(nX);
  for (int c = 0; c < nX; ++c) out.fixed_values(c) = s.u_lo(out.fixed[c]);

  auto pick_cols = [](const Mat& M, const std::vector<int>& cols) {
    Mat o(M.rows(), static_cast<int>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) o.col(static_cast<int>(c)) = M.col(cols[c]);
    return o;
  };
  auto pick_rows = [](const Mat& M, const std::vector<int>& rows) {
    Mat o(static_cast<int>(rows.size()), M.cols());
    for (std::size_t c = 0; c < rows.size(); ++c) o.row(static_cast<int>(c)) = M.row(rows[c]);
    return o;
  };

  const Vec& v = out.fixed_values;
  out.A = s.A;
  out.B = pick_cols(s.B, out.free);
  out.b = s.b;
  if (nX > 0 && s.B.rows() > 0) out.b += pick_cols(s.B, out.fixed) * v;
  out.Q = s.Q;
  out.S = pick_rows(s.S, out.free);
  const Mat R_rows = pick_rows(s.R, out.free);
  out.R = pick_cols(R_rows, out.free);
  out.q = s.q;
  Vec r_full = s.r;
  if (nX > 0) {
    out.q += pick_rows(s.S, out.fixed).transpose() * v;
    r_full += pick_cols(s.R, out.fixed) * v;
  }
  out.r.resize(out.nu);
  for (int a = 0; a < out.nu; ++a) out.r(a) = r_full(out.free[a]);

  const Mat D_F = pick_cols(s.D, out.free);
  const Vec Dv = nX > 0 ? Vec(pick_cols(s.D, out.fixed) * v) : Vec::Zero(s.ng());
  std::vector<Vec> gx, gu;
  std::vector<double> hh;
  for (int i = 0; i < s.ng(); ++i) {
    const bool has_lo = std::isfinite(s.lo(i)), has_hi = std::isfinite(s.hi(i));
    if (!has_lo && !has_hi) continue;
    const Vec cx = s.C.row(i).transpose();
    const Vec du = D_F.row(i).transpose();
    const double cmax = std::max(inf_norm(cx), inf_norm(du));
    const double scale = 1.0 + std::max(inf_norm(s.C.row(i).transpose()), inf_norm(s.D.row(i).transpose()));
    for (double side : {1.0, -1.0}) {
      if ((side > 0 && !has_hi) || (side < 0 && !has_lo)) continue;
      const double bound = side > 0 ? s.hi(i) - Dv(i) : -(s.lo(i) - Dv(i));
      const ConstraintId id = 2 * (general_offset + i) + (side > 0 ? 1 : 0);
      if (cmax <= 1e-13 * scale) {
        if (bound < -feas_tol && !infeasible) infeasible = id;
        continue;
      }
      gx.push_back(side * cx);
      gu.push_back(side * du);
      hh.push_back(bound);
      out.src_row.push_back(i);
      out.src_side.push_back(side);
    }
  }
  const int md = static_cast<int>(gx.size());
  out.Gx.resize(md, out.nx);
  out.Gu.resize(md, out.nu);
  out.h.resize(md);
  for (int i = 0; i < md; ++i) {
    out.Gx.row(i) = gx[i].transpose();
    out.Gu.row(i) = gu[i].transpose();
    out.h(i) = hh[i];
  }
  out.state_rows = md > 0 && out.nx > 0 && out.Gx.cwiseAbs().maxCoeff() > 0.0;

  std::vector<double> bh;
  for (int a = 0; a < out.nu; ++a) {
    const int j = out.free[a];
    if (std::isfinite(s.u_hi(j))) {
      out.box_var.push_back(a);
      out.box_sign.push_back(1.0);
      bh.push_back(s.u_hi(j));
    }
    if (std::isfinite(s.u_lo(j))) {
      out.box_var.push_back(a);
      out.box_sign.push_back(-1.0);
      bh.push_back(-s.u_lo(j));
    }
  }
  out.box_h = Eigen::Map<Vec>(bh.data(), static_cast<int>(bh.size()));
  return infeasible;
}

struct Factor {
  std::vector<Mat> P, K, L;
  std::vector<Eigen::LLT<Mat>> M;
};

struct Rhs {
  std::vector<Vec> qh, rh, d;  // LQ linear terms and dynamics residuals
};

struct Step {
  std::vector<Vec> dx, du, pi;  // pi: new multipliers, not increments
};

}  // namespace

QpSolution solve_riccati_ipm(const StagewiseQp& qp, const SolverSettings& settings) {
  detail::Stopwatch clock;
  qp.validate();
  detail::check_settings(settings, "solve_riccati_ipm");
  const double tol = settings.tolerance;
  const int N = qp.horizon();

  QpSolution sol;
  FlopCounter flops;

  std::vector<Stage> st(N + 1);
  int mg_total = 0;
  for (const auto& s : qp.stages) mg_total += s.ng();
  {
    int go = 0;
    for (int k = 0; k <= N; ++k) {
      auto bad = build_stage(qp.stages[k], go, tol, st[k]);
      if (bad && !sol.infeasible_constraint) sol.infeasible_constraint = bad;
      go += qp.stages[k].ng();
    }
  }

  std::vector<Vec> x(N + 1), u(N + 1), s(N + 1), lam(N + 1), pi(N);
  x[0] = qp.x0;
  for (int k = 0; k <= N; ++k) {
    u[k].resize(st[k].nu);
    for (int a = 0; a < st[k].nu; ++a) {
      const int j = st[k].free[a];
      u[k](a) = std::clamp(0.0, qp.stages[k].u_lo(j), qp.stages[k].u_hi(j));
    }
    if (k < N) {
      x[k + 1] = st[k].A * x[k] + st[k].B * u[k] + st[k].b;
      pi[k] = Vec::Zero(st[k + 1].nx);
    }
  }
  double floor = 1.0;
  if (settings.ipm_warm_start && settings.warm_start && settings.warm_start->primal &&
      settings.warm_start->primal->size() == qp.num_vars()) {
    const Vec& p = *settings.warm_start->primal;
    int off = 0;
    for (int k = 0; k <= N; ++k) {
      if (k > 0) x[k] = p.segment(off, st[k].nx);
      off += st[k].nx;
      for (int a = 0; a < st[k].nu; ++a) u[k](a) = p(off + st[k].free[a]);
      off += qp.stages[k].nu();
    }
    floor = 1e-2;
  }
  int m_total = 0;
  for (int k = 0; k <= N; ++k) {
    Vec hk(st[k].m());
    hk << st[k].h, st[k].box_h;
    s[k] = (hk - st[k].values(x[k], u[k])).cwiseMax(floor);
    lam[k] = Vec::Ones(st[k].m());
    m_total += st[k].m();
  }

  auto h_of = [&](int k) {
    Vec hk(st[k].m());
    hk << st[k].h, st[k].box_h;
    return hk;
  };

  // Assemble the flattened primal/dual point and its KKT residuals.
  auto finish = [&](SolveStatus status) {
    const int n = qp.num_vars();
    sol.primal.resize(n);
    sol.eq_duals.resize(qp.num_eq());
    sol.ineq_duals = Vec::Zero(mg_total);
    sol.box_duals = Vec::Zero(n);
    sol.active_set.clear();
    std::vector<Vec> uf(N + 1);
    int off = 0, go = 0;
    for (int k = 0; k <= N; ++k) {
      const auto& S = st[k];
      const auto& o = qp.stages[k];
      uf[k].resize(o.nu());
      for (int a = 0; a < S.nu; ++a) uf[k](S.free[a]) = u[k](a);
      for (std::size_t c = 0; c < S.fixed.size(); ++c) uf[k](S.fixed[c]) = S.fixed_values(static_cast<int>(c));
      sol.primal.segment(off, S.nx) = x[k];
      sol.primal.segment(off + S.nx, o.nu()) = uf[k];
      for (int i = 0; i < S.md(); ++i) {
        sol.ineq_duals(go + S.src_row[i]) += S.src_side[i] * lam[k](i);
        if (lam[k](i) > s[k](i)) {
          sol.active_set.push_back(2 * (go + S.src_row[i]) + (S.src_side[i] > 0 ? 1 : 0));
        }
      }
      for (int i = 0; i < S.mb(); ++i) {
        const int j = S.free[S.box_var[i]];
        const double l = lam[k](S.md() + i);
        sol.box_duals(off + S.nx + j) += S.box_sign[i] * l;
        if (l > s[k](S.md() + i)) {
          sol.active_set.push_back(2 * (mg_total + off + S.nx + j) + (S.box_sign[i] > 0 ? 1 : 0));
        }
      }
      off += S.nx + o.nu();
      go += o.ng();
    }
    // Fixed inputs take their multiplier from stationarity; y_init likewise.
    off = 0;
    go = 0;
    int yo = qp.stages[0].nx();
    for (int k = 0; k <= N; ++k) {
      const auto& S = st[k];
      const auto& o = qp.stages[k];
      const Vec zk = sol.ineq_duals.segment(go, o.ng());
      if (!S.fixed.empty()) {
        Vec gu = o.R * uf[k] + o.S * x[k] + o.r;
        if (o.ng() > 0) gu.noalias() += o.D.transpose() * zk;
        if (k < N) gu.noalias() += o.B.transpose() * pi[k];
        for (int j : S.fixed) sol.box_duals(off + S.nx + j) = -gu(j);
      }
      if (k == 0) {
        Vec gx = o.Q * x[0] + o.q;
        if (o.nu() > 0) gx.noalias() += o.S.transpose() * uf[0];
        if (o.ng() > 0) gx.noalias() += o.C.transpose() * zk;
        if (N > 0) gx.noalias() += o.A.transpose() * pi[0];
        sol.eq_duals.head(o.nx()) = -gx;
      }
      if (k < N) {
        sol.eq_duals.segment(yo, pi[k].size()) = pi[k];
        yo += static_cast<int>(pi[k].size());
      }
      off += S.nx + o.nu();
      go += o.ng();
    }
    std::sort(sol.active_set.begin(), sol.active_set.end());
    sol.kkt = kkt_residuals(qp, sol.primal, sol.eq_duals, sol.ineq_duals, sol.box_duals);
    std::vector<Vec> xs(x.begin(), x.end());
    std::vector<Vec> us(uf.begin(), uf.begin() + N);
    sol.objective = stagewise_objective(qp, xs, us);
    sol.status = status;
    sol.flops = flops.total();
    sol.solve_time = clock.seconds();
  };

  if (sol.infeasible_constraint) {
    finish(SolveStatus::kInfeasible);
    return sol;
  }

  Factor fac;
  fac.P.resize(N + 1);
  fac.K.resize(N);
  fac.L.resize(N);
  fac.M.resize(N);

  // Riccati factorization of the Newton matrix for weights W = λ/s.
  auto factorize = [&](double reg) {
    std::vector<Mat> Qt(N + 1), St(N + 1), Rt(N + 1);
    for (int k = 0; k <= N; ++k) {
      const auto& S = st[k];
      const Vec w = lam[k].cwiseQuotient(s[k]);
      Qt[k] = S.Q;
      St[k] = S.S;
      Rt[k] = S.R;
      if (S.md() > 0) {
        const Vec wd = w.head(S.md());
        const Mat WGu = wd.asDiagonal() * S.Gu;
        Rt[k].noalias() += S.Gu.transpose() * WGu;
        if (S.state_rows) {
          const Mat WGx = wd.asDiagonal() * S.Gx;
          Qt[k].noalias() += S.Gx.transpose() * WGx;
          St[k].noalias() += S.Gu.transpose() * WGx;
          flops.syrk(S.nx + S.nu, S.md());
        } else {
          flops.syrk(S.nu, S.md());
        }
      }
      for (int i = 0; i < S.mb(); ++i) Rt[k](S.box_var[i], S.box_var[i]) += w(S.md() + i);
      if (reg > 0.0 && S.nu > 0) Rt[k].diagonal().array() += reg * (1.0 + Rt[k].diagonal().cwiseAbs().maxCoeff());
    }
    fac.P[N] = Qt[N];
    for (int k = N - 1; k >= 0; --k) {
      const auto& S = st[k];
      const int nx = S.nx, nu = S.nu, nxn = st[k + 1].nx;
      const Mat BtP = S.B.transpose() * fac.P[k + 1];
      flops.gemm(nu, nxn, nxn);
      Mat M = Rt[k] + BtP * S.B;
      flops.gemm(nu, nu, nxn);
      fac.L[k] = St[k] + BtP * S.A;
      flops.gemm(nu, nx, nxn);
      fac.M[k].compute(M);
      flops.potrf(nu);
      if (nu > 0 && fac.M[k].info() != Eigen::Success) return false;
      fac.K[k] = nu > 0 ? Mat(-fac.M[k].solve(fac.L[k])) : Mat::Zero(0, nx);
      flops.trsm(nu, nx);
      flops.trsm(nu, nx);
      if (k > 0) {
        const Mat PA = fac.P[k + 1] * S.A;
        flops.gemm(nxn, nx, nxn);
        Mat P = Qt[k] + S.A.transpose() * PA;
        flops.gemm(nx, nx, nxn);
        P.noalias() += fac.L[k].transpose() * fac.K[k];
        flops.gemm(nx, nx, nu);
        fac.P[k] = 0.5 * (P + P.transpose());
      }
    }
    return true;
  };

  auto solve = [&](const Rhs& rhs) {
    Step out;
    out.dx.resize(N + 1);
    out.du.resize(N + 1);
    out.pi.resize(N);
    std::vector<Vec> p(N + 1), kff(N);
    p[N] = rhs.qh[N];
    for (int k = N - 1; k >= 0; --k) {
      const auto& S = st[k];
      const int nx = S.nx, nu = S.nu, nxn = st[k + 1].nx;
      const Vec v = fac.P[k + 1] * rhs.d[k] + p[k + 1];
      flops.gemv(nxn, nxn);
      const Vec l = rhs.rh[k] + S.B.transpose() * v;
      flops.gemv(nu, nxn);
      kff[k] = nu > 0 ? Vec(-fac.M[k].solve(l)) : Vec();
      flops.trsv(nu);
      flops.trsv(nu);
      if (k > 0) {
        p[k] = rhs.qh[k] + S.A.transpose() * v + fac.L[k].transpose() * kff[k];
        flops.gemv(nx, nxn);
        flops.gemv(nx, nu);
      }
    }
    out.dx[0] = Vec::Zero(st[0].nx);
    for (int k = 0; k < N; ++k) {
      const auto& S = st[k];
      out.du[k] = fac.K[k] * out.dx[k] + kff[k];
      out.dx[k + 1] = S.A * out.dx[k] + S.B * out.du[k] + rhs.d[k];
      out.pi[k] = fac.P[k + 1] * out.dx[k + 1] + p[k + 1];
      flops.gemv(S.nu, S.nx);
      flops.gemv(st[k + 1].nx, S.nx);
      flops.gemv(st[k + 1].nx, S.nu);
      flops.gemv(st[k + 1].nx, st[k + 1].nx);
    }
    out.du[N] = Vec::Zero(st[N].nu);
    return out;
  };

  const double scale = [&] {
    double sc = 1.0;
    for (int k = 0; k <= N; ++k) sc = std::max({sc, 1.0 + inf_norm(st[k].q) + inf_norm(st[k].r) + inf_norm(h_of(k))});
    return sc;
  }();

  int iter = 0;
  double prev_merit = kInf;
  SolveStatus status = SolveStatus::kMaxIter;
  while (true) {
    // residuals
    std::vector<Vec> rx(N + 1), ru(N + 1), rd(N), rp(N + 1);
    double stat = 0.0, prim = 0.0, viol = 0.0, comp = 0.0;
    for (int k = 0; k <= N; ++k) {
      const auto& S = st[k];
      rx[k] = S.Q * x[k] + S.q;
      ru[k] = S.R * u[k] + S.S * x[k] + S.r;
      if (S.nu > 0) rx[k].noalias() += S.S.transpose() * u[k];
      S.add_x_transpose(lam[k], rx[k]);
      S.add_u_transpose(lam[k], ru[k]);
      const Vec hk = h_of(k);
      const Vec vals = S.values(x[k], u[k]);
      rp[k] = vals + s[k] - hk;
      if (S.m() > 0) {
        viol = std::max(viol, (vals - hk).maxCoeff());
        comp = std::max(comp, lam[k].cwiseProduct(hk - vals).cwiseAbs().maxCoeff());
      }
    }
    for (int k = 0; k < N; ++k) {
      const auto& S = st[k];
      rd[k] = S.A * x[k] + S.B * u[k] + S.b - x[k + 1];
      prim = std::max(prim, inf_norm(rd[k]));
      Vec gx = rx[k];
      gx.noalias() += S.A.transpose() * pi[k];
      if (k > 0) gx -= pi[k - 1];
      Vec gu = ru[k];
      gu.noalias() += S.B.transpose() * pi[k];
      if (k > 0) stat = std::max(stat, inf_norm(gx));
      stat = std::max(stat, inf_norm(gu));
    }
    if (N > 0) stat = std::max(stat, inf_norm(Vec(rx[N] - pi[N - 1])));
    stat = std::max(stat, inf_norm(ru[N]));

    const double merit = std::max({stat, prim, viol, comp});
    if (detail::should_verify(merit, prev_merit, tol, iter >= settings.max_iterations)) {
      finish(SolveStatus::kOptimal);
      if (sol.kkt.max() <= tol) {
        status = SolveStatus::kOptimal;
        break;
      }
    }
    prev_merit = merit;
    if (iter >= settings.max_iterations) break;
    double lmax = 0.0;
    bool finite = true;
    for (int k = 0; k <= N; ++k) {
      lmax = std::max(lmax, inf_norm(lam[k]));
      finite = finite && x[k].allFinite() && u[k].allFinite();
    }
    if (lmax > detail::kDivergedDual * scale || !finite) {
      status = SolveStatus::kInfeasible;
      break;
    }

    const std::int64_t before = flops.total();
    if (!factorize(0.0) && !factorize(1e-12)) {
      status = SolveStatus::kNumericalFailure;
      break;
    }
    ++iter;

    auto make_rhs = [&](const std::vector<Vec>& rc) {
      Rhs rhs;
      rhs.qh.resize(N + 1);
      rhs.rh.resize(N + 1);
      rhs.d = rd;
      for (int k = 0; k <= N; ++k) {
        const auto& S = st[k];
        const Vec t = lam[k] + (lam[k].cwiseProduct(rp[k]) - rc[k]).cwiseQuotient(s[k]);
        rhs.qh[k] = S.Q * x[k] + S.q;
        if (S.nu > 0) rhs.qh[k].noalias() += S.S.transpose() * u[k];
        S.add_x_transpose(t, rhs.qh[k]);
        rhs.rh[k] = S.R * u[k] + S.S * x[k] + S.r;
        S.add_u_transpose(t, rhs.rh[k]);
      }
      return rhs;
    };
    auto recover = [&](const Step& stp, const std::vector<Vec>& rc, std::vector<Vec>& ds,
                       std::vector<Vec>& dl) {
      ds.resize(N + 1);
      dl.resize(N + 1);
      for (int k = 0; k <= N; ++k) {
        ds[k] = -rp[k] - st[k].values(stp.dx[k], stp.du[k]);
        dl[k] = (-rc[k] - lam[k].cwiseProduct(ds[k])).cwiseQuotient(s[k]);
      }
    };
    auto steplen = [&](const std::vector<Vec>& ds, const std::vector<Vec>& dl) {
      double a = 1.0;
      for (int k = 0; k <= N; ++k) a = std::min({a, max_step(s[k], ds[k]), max_step(lam[k], dl[k])});
      return a;
    };

    std::vector<Vec> rc(N + 1);
    double mu = 0.0;
    for (int k = 0; k <= N; ++k) {
      rc[k] = s[k].cwiseProduct(lam[k]);
      mu += rc[k].sum();
    }
    std::vector<Vec> ds, dl;
    Step stp;
    if (m_total > 0) {
      mu /= m_total;
      const Step aff = solve(make_rhs(rc));
      std::vector<Vec> ds_a, dl_a;
      recover(aff, rc, ds_a, dl_a);
      const double a_aff = steplen(ds_a, dl_a);
      double mu_aff = 0.0;
      for (int k = 0; k <= N; ++k) mu_aff += (s[k] + a_aff * ds_a[k]).dot(lam[k] + a_aff * dl_a[k]);
      mu_aff /= m_total;
      const double sigma = std::pow(mu_aff / mu, 3);
      for (int k = 0; k <= N; ++k) {
        rc[k] = (rc[k] + ds_a[k].cwiseProduct(dl_a[k])).array() - sigma * mu;
      }
      stp = solve(make_rhs(rc));
      recover(stp, rc, ds, dl);
    } else {
      stp = solve(make_rhs(rc));
      recover(stp, rc, ds, dl);
    }
    const double alpha = m_total > 0 ? std::min(1.0, 0.995 * steplen(ds, dl)) : 1.0;
    for (int k = 0; k <= N; ++k) {
      x[k] += alpha * stp.dx[k];
      u[k] += alpha * stp.du[k];
      s[k] += alpha * ds[k];
      lam[k] += alpha * dl[k];
      if (k < N) pi[k] += alpha * (stp.pi[k] - pi[k]);
    }
    sol.iteration_flops.push_back(flops.total() - before);
  }

  sol.iterations = iter;
  finish(status);
  return sol;
}

}  // namespace quadqp
