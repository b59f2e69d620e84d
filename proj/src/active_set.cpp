#include "quadqp/kkt.hpp"
#include "quadqp/solvers.hpp"

#include "reduced_qp.hpp"
#include "solver_common.hpp"

#include <algorithm>
#include <cmath>

namespace quadqp {

namespace {

// Goldfarb-Idnani state for  min ½wᵀHw + gᵀw  s.t. a_iᵀw ≤ h_i.
// J = L⁻ᵀ Q with H = LLᵀ, JᵀN_A = [R; 0] for the active normals n_i = −a_i.
class DualActiveSet {
 public:
  DualActiveSet(const Mat& H, const Vec& g, Mat normals, Vec h, FlopCounter& flops)
      : n_(static_cast<int>(H.rows())), A_(std::move(normals)), h_(std::move(h)), g_(g), flops_(flops) {
    R_ = Mat::Zero(n_, n_);
    in_active_.assign(A_.cols(), false);
  }

  bool factor(const Mat& H) {
    Eigen::LLT<Mat> llt(H);
    flops_.potrf(n_);
    if (llt.info() != Eigen::Success) {
      Mat Hr = H;
      Hr.diagonal().array() += 1e-12 * (1.0 + H.diagonal().cwiseAbs().maxCoeff());
      llt.compute(Hr);
      flops_.potrf(n_);
      if (llt.info() != Eigen::Success) return false;
    }
    const Mat L = llt.matrixL();
    J_ = L.transpose().triangularView<Eigen::Upper>().solve(Mat::Identity(n_, n_));
    flops_.trsm(n_, n_);
    w_ = -(J_ * (J_.transpose() * g_));
    flops_.gemv(n_, n_);
    flops_.gemv(n_, n_);
    return true;
  }

  [[nodiscard]] int size() const { return static_cast<int>(active_.size()); }
  [[nodiscard]] const Vec& w() const { return w_; }
  [[nodiscard]] const std::vector<int>& active() const { return active_; }
  [[nodiscard]] const std::vector<double>& u() const { return u_; }
  [[nodiscard]] bool is_active(int i) const { return in_active_[i]; }
  /// Equality entries keep a free-sign multiplier and are never dropped.
  [[nodiscard]] bool is_equality(int j) const { return equality_[j]; }
  void mark_equality(int j) { equality_[j] = true; }
  [[nodiscard]] double slack(int i) const { return h_(i) - A_.col(i).dot(w_); }

  // Append constraint i using d = Jᵀn_i. Returns false if dependent.
  bool add(int i, Vec d) {
    const int q = size();
    for (int j = n_ - 1; j > q; --j) {
      double cc = d(j - 1), ss = d(j);
      const double hyp = std::hypot(cc, ss);
      if (hyp == 0.0) continue;
      d(j) = 0.0;
      cc /= hyp;
      ss /= hyp;
      if (cc < 0.0) {
        cc = -cc;
        ss = -ss;
        d(j - 1) = -hyp;
      } else {
        d(j - 1) = hyp;
      }
      rotate_columns(J_, j - 1, j, cc, ss);
    }
    const double rn = q > 0 ? std::max(1.0, R_.topLeftCorner(q, q).cwiseAbs().maxCoeff()) : 1.0;
    if (q >= n_ || std::abs(d(q)) <= 1e-12 * rn) return false;
    R_.col(q).head(q + 1) = d.head(q + 1);
    active_.push_back(i);
    in_active_[i] = true;
    u_.push_back(0.0);
    equality_.push_back(false);
    return true;
  }

  void drop(int l) {
    const int q = size();
    in_active_[active_[l]] = false;
    active_.erase(active_.begin() + l);
    u_.erase(u_.begin() + l);
    equality_.erase(equality_.begin() + l);
    for (int c = l; c < q - 1; ++c) R_.col(c) = R_.col(c + 1);
    R_.col(q - 1).setZero();
    for (int j = l; j < q - 1; ++j) {
      double cc = R_(j, j), ss = R_(j + 1, j);
      const double hyp = std::hypot(cc, ss);
      if (hyp == 0.0) continue;
      cc /= hyp;
      ss /= hyp;
      R_(j + 1, j) = 0.0;
      if (cc < 0.0) {
        cc = -cc;
        ss = -ss;
        R_(j, j) = -hyp;
      } else {
        R_(j, j) = hyp;
      }
      for (int k = j + 1; k < q - 1; ++k) {
        const double t1 = R_(j, k), t2 = R_(j + 1, k);
        R_(j, k) = cc * t1 + ss * t2;
        R_(j + 1, k) = ss * t1 - cc * t2;
      }
      rotate_columns(J_, j, j + 1, cc, ss);
    }
  }

  [[nodiscard]] Vec d_of(int i) const {
    flops_.gemv(n_, n_);
    return -(J_.transpose() * A_.col(i));
  }

  // r = R⁻¹ d_head
  [[nodiscard]] Vec r_of(const Vec& d) const {
    const int q = size();
    flops_.trsv(q);
    return R_.topLeftCorner(q, q).triangularView<Eigen::Upper>().solve(d.head(q));
  }

  [[nodiscard]] Vec z_of(const Vec& d) const {
    const int q = size();
    flops_.gemv(n_, n_ - q);
    return J_.rightCols(n_ - q) * d.tail(n_ - q);
  }

  void set_last_dual(double v) { u_.back() = v; }
  void clamp_duals() {
    for (std::size_t j = 0; j < u_.size(); ++j) {
      if (!equality_[j]) u_[j] = std::max(u_[j], 0.0);
    }
  }

  void step(const Vec& z, const Vec& r, double t, double& u_new) {
    w_ += t * z;
    for (int j = 0; j < size(); ++j) u_[j] -= t * r(j);
    u_new += t;
  }

  // Equality-constrained optimum of the current active set and its multipliers.
  void resolve() {
    const int q = size();
    Vec b(q);
    for (int j = 0; j < q; ++j) b(j) = -h_(active_[j]);
    const auto Rq = R_.topLeftCorner(q, q).triangularView<Eigen::Upper>();
    const Vec y1 = Rq.transpose().solve(b);
    const Vec J2g = J_.rightCols(n_ - q).transpose() * g_;
    w_ = J_.leftCols(q) * y1 - J_.rightCols(n_ - q) * J2g;
    const Vec uv = Rq.solve(Vec(y1 + J_.leftCols(q).transpose() * g_));
    flops_.trsv(q);
    flops_.trsv(q);
    flops_.gemv(n_, n_);
    flops_.gemv(n_, n_);
    for (int j = 0; j < q; ++j) u_[j] = uv(j);
  }

 private:
  static void rotate_columns(Mat& M, int a, int b, double cc, double ss) {
    for (int k = 0; k < M.rows(); ++k) {
      const double t1 = M(k, a), t2 = M(k, b);
      M(k, a) = cc * t1 + ss * t2;
      M(k, b) = ss * t1 - cc * t2;
    }
  }

  int n_;
  Mat A_;  // columns a_i
  Vec h_;
  Vec g_;
  FlopCounter& flops_;
  Mat J_, R_;
  Vec w_;
  std::vector<int> active_;
  std::vector<bool> in_active_;
  std::vector<double> u_;
  std::vector<bool> equality_;
};

}  // namespace

QpSolution solve_active_set(const DenseQp& qp, const SolverSettings& settings) {
  detail::Stopwatch clock;
  qp.validate();
  detail::check_settings(settings, "solve_active_set");
  const double tol = settings.tolerance;

  QpSolution sol;
  FlopCounter flops;
  // pinned variables (lo == hi) stay in the working set like any other bound
  detail::Reduction reduction(qp, tol, flops, false);
  const auto& red = reduction.reduced();
  const auto& rows = red.rows;
  const int n = static_cast<int>(red.H.rows());
  const int m = rows.size();

  Mat normals = Mat::Zero(n, m);
  Vec h(m);
  if (rows.num_dense() > 0) normals.leftCols(rows.num_dense()) = rows.G.transpose();
  for (int i = 0; i < rows.num_box(); ++i) {
    normals(rows.box_var[i], rows.num_dense() + i) = rows.box_sign[i];
  }
  h << rows.h, rows.box_h;

  auto finish = [&](const Vec& w, const DualActiveSet* as, SolveStatus status) {
    Vec lambda = Vec::Zero(m);
    if (as) {
      for (int j = 0; j < as->size(); ++j) {
        lambda(as->active()[j]) = as->u()[j];
        sol.active_set.push_back(rows.id(as->active()[j]));
      }
      std::sort(sol.active_set.begin(), sol.active_set.end());
    }
    sol.primal = reduction.primal(w);
    reduction.recover_duals(sol.primal, lambda, sol.eq_duals, sol.ineq_duals, sol.box_duals);
    sol.kkt = kkt_residuals(qp, sol.primal, sol.eq_duals, sol.ineq_duals, sol.box_duals);
    sol.objective = qp.objective(sol.primal);
    sol.status = status;
    sol.flops = flops.total();
    sol.solve_time = clock.seconds();
    return sol;
  };

  if (!reduction.equalities_consistent() || red.trivially_infeasible) {
    sol.infeasible_constraint = red.trivially_infeasible;
    return finish(Vec::Zero(n), nullptr, SolveStatus::kInfeasible);
  }

  DualActiveSet as(red.H, red.g, std::move(normals), h, flops);
  if (!as.factor(red.H)) return finish(Vec::Zero(n), nullptr, SolveStatus::kNumericalFailure);

  const int cap = std::max(settings.max_iterations, 5 * (n + m));
  int changes = 0;
  std::int64_t mark = flops.total();
  auto count_change = [&] {
    ++changes;
    sol.iteration_flops.push_back(flops.total() - mark);
    mark = flops.total();
  };

  // rows of pinned variables; pin_partner[i] is the opposite side or -1
  std::vector<int> pin_partner(m, -1);
  std::vector<std::pair<int, int>> pins;
  for (int j = 0; j < qp.num_vars(); ++j) {
    if (!detail::equal_bounds(qp.x_lo(j), qp.x_hi(j))) continue;
    const ConstraintId base = 2 * (qp.num_general() + j);
    const int hi = reduction.row_of(base + 1), lo = reduction.row_of(base);
    if (hi < 0 || lo < 0) continue;
    pin_partner[hi] = lo;
    pin_partner[lo] = hi;
    pins.emplace_back(hi, lo);
  }
  auto mark_if_pin = [&](int row) {
    if (pin_partner[row] >= 0) as.mark_equality(as.size() - 1);
  };

  if (settings.warm_start && !settings.warm_start->active_set.empty()) {
    for (ConstraintId id : settings.warm_start->active_set) {
      const int i = reduction.row_of(id);
      if (i < 0 || as.is_active(i) || (pin_partner[i] >= 0 && as.is_active(pin_partner[i]))) continue;
      if (as.add(i, as.d_of(i))) mark_if_pin(i);
    }
    if (as.size() > 0) {
      as.resolve();
      while (as.size() > 0) {
        int worst = -1;
        double most = -tol;
        for (int j = 0; j < as.size(); ++j) {
          if (!as.is_equality(j) && as.u()[j] < most) {
            most = as.u()[j];
            worst = j;
          }
        }
        if (worst < 0) break;
        as.drop(worst);
        as.resolve();
        count_change();
      }
      as.clamp_duals();
    }
  }

  // One dual step sequence bringing row p into the working set (partial
  // steps drop blocking inequalities). Equality rows target zero slack.
  SolveStatus status = SolveStatus::kOptimal;
  auto bring_in = [&](int p, bool equality) {
    double u_p = 0.0;
    while (true) {
      const Vec d = as.d_of(p);
      const Vec z = as.z_of(d);
      const Vec r = as.r_of(d);
      const int q = as.size();

      double t1 = kInf;
      int l = -1;
      for (int j = 0; j < q; ++j) {
        if (!as.is_equality(j) && r(j) > 1e-14) {
          const double ratio = as.u()[j] / r(j);
          if (ratio < t1) {
            t1 = ratio;
            l = j;
          }
        }
      }
      const double d2 = d.tail(n - q).norm();
      double t2 = kInf;
      if (d2 > 1e-11 * d.norm()) t2 = std::max(0.0, -as.slack(p)) / (d2 * d2);

      const double t = std::min(t1, t2);
      if (!std::isfinite(t)) {
        if (equality && d2 <= 1e-11 * d.norm() && std::abs(as.slack(p)) <= tol) return;  // already implied
        sol.infeasible_constraint = rows.id(p);
        status = SolveStatus::kInfeasible;
        return;
      }
      if (!std::isfinite(t2)) {
        as.step(Vec::Zero(n), r, t, u_p);
        as.drop(l);
        count_change();
      } else if (t2 <= t1) {
        as.step(z, r, t, u_p);
        if (!as.add(p, d)) {
          status = SolveStatus::kNumericalFailure;
          return;
        }
        as.set_last_dual(u_p);
        if (equality) as.mark_equality(as.size() - 1);
        count_change();
        return;
      } else {
        as.step(z, r, t, u_p);
        as.drop(l);
        count_change();
      }
      if (changes >= cap) {
        status = SolveStatus::kMaxIter;
        return;
      }
    }
  };

  for (const auto& [hi, lo] : pins) {
    if (status != SolveStatus::kOptimal) break;
    if (as.is_active(hi) || as.is_active(lo)) continue;
    bring_in(as.slack(lo) < as.slack(hi) ? lo : hi, true);
  }

  while (status == SolveStatus::kOptimal) {
    int p = -1;
    double worst = -tol;
    for (int i = 0; i < m; ++i) {
      if (as.is_active(i) || pin_partner[i] >= 0) continue;
      const double sl = as.slack(i);
      if (sl < worst) {
        worst = sl;
        p = i;
      }
    }
    if (p < 0) break;
    if (changes >= cap) {
      status = SolveStatus::kMaxIter;
      break;
    }
    bring_in(p, false);
  }

  sol.iterations = changes;
  finish(as.w(), &as, status);
  if (status == SolveStatus::kOptimal && sol.kkt.max() > tol) sol.status = SolveStatus::kNumericalFailure;
  return sol;
}

}  // namespace quadqp
