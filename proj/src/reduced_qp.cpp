#include "reduced_qp.hpp"

#include <algorithm>
#include <cmath>

namespace quadqp::detail {

Vec OneSidedRows::values(const Vec& w) const {
  Vec v(size());
  if (num_dense() > 0) v.head(num_dense()) = G * w;
  for (int i = 0; i < num_box(); ++i) v(num_dense() + i) = box_sign[i] * w(box_var[i]);
  return v;
}

void OneSidedRows::add_transpose_times(const Vec& v, Vec& out) const {
  if (num_dense() > 0) out.noalias() += G.transpose() * v.head(num_dense());
  for (int i = 0; i < num_box(); ++i) out(box_var[i]) += box_sign[i] * v(num_dense() + i);
}

double max_step(const Vec& v, const Vec& dv) {
  double alpha = 1.0;
  for (int i = 0; i < v.size(); ++i) {
    if (dv(i) < 0.0) alpha = std::min(alpha, -v(i) / dv(i));
  }
  return alpha;
}

namespace {

}  // namespace

bool equal_bounds(double lo, double hi) {
  return std::isfinite(lo) && std::isfinite(hi) && hi - lo <= 1e-14 * (1.0 + std::abs(lo));
}

Reduction::Reduction(const DenseQp& qp, double feas_tol, FlopCounter& flops, bool fix_equal_bounds) : qp_(qp) {
  const int n = qp.num_vars();
  const int mg = qp.num_general();

  std::vector<int> pos_in_free(n, -1);
  for (int j = 0; j < n; ++j) {
    if (fix_equal_bounds && equal_bounds(qp.x_lo(j), qp.x_hi(j))) {
      fixed_.push_back(j);
    } else {
      pos_in_free[j] = static_cast<int>(free_.size());
      free_.push_back(j);
    }
  }
  fixed_values_.resize(static_cast<int>(fixed_.size()));
  for (std::size_t i = 0; i < fixed_.size(); ++i) fixed_values_(static_cast<int>(i)) = qp.x_lo(fixed_[i]);

  std::vector<bool> converted(mg, false);
  for (int i = 0; i < mg; ++i) {
    if (equal_bounds(qp.c_lo(i), qp.c_hi(i))) {
      converted[i] = true;
      converted_rows_.push_back(i);
    }
  }

  const int nf = static_cast<int>(free_.size());
  const int nX = static_cast<int>(fixed_.size());
  const int n_eq = qp.num_eq();
  const int p = n_eq + static_cast<int>(converted_rows_.size());

  auto cols_of = [&](const Mat& M, const std::vector<int>& cols) {
    Mat out(M.rows(), static_cast<int>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<int>(c)) = M.col(cols[c]);
    return out;
  };

  const Mat Afull_F = cols_of(qp.A_eq, free_);
  const Mat Afull_X = cols_of(qp.A_eq, fixed_);
  const Mat C_F = cols_of(qp.C, free_);
  const Mat C_X = cols_of(qp.C, fixed_);
  const Vec Cv = nX > 0 ? Vec(C_X * fixed_values_) : Vec::Zero(mg);

  A_free_.resize(p, nf);
  b_free_.resize(p);
  if (n_eq > 0) {
    A_free_.topRows(n_eq) = Afull_F;
    b_free_.head(n_eq) = qp.b_eq - (nX > 0 ? Vec(Afull_X * fixed_values_) : Vec::Zero(n_eq));
  }
  for (std::size_t r = 0; r < converted_rows_.size(); ++r) {
    const int i = converted_rows_[r];
    A_free_.row(n_eq + static_cast<int>(r)) = C_F.row(i);
    b_free_(n_eq + static_cast<int>(r)) = qp.c_lo(i) - Cv(i);
  }

  x_p_ = Vec::Zero(nf);
  if (p > 0) {
    reduced_.uses_nullspace = true;
    Eigen::ColPivHouseholderQR<Mat> qr(A_free_.transpose());
    qr.setThreshold(1e-11);
    flops.geqrf(std::max(nf, p), std::min(nf, p));
    rank_ = static_cast<int>(qr.rank());
    const Mat Q = qr.householderQ();
    flops.geqrf(nf, std::min(nf, p));
    Q1_ = Q.leftCols(rank_);
    Z_ = Q.rightCols(nf - rank_);
    R11_ = qr.matrixR().topLeftCorner(rank_, rank_).triangularView<Eigen::Upper>();
    perm_ = qr.colsPermutation();
    const Vec pb = perm_.transpose() * b_free_;
    const Vec a = R11_.transpose().triangularView<Eigen::Lower>().solve(pb.head(rank_));
    flops.trsv(rank_);
    x_p_ = Q1_ * a;
    flops.gemv(nf, rank_);
    const double res = p > 0 ? (A_free_ * x_p_ - b_free_).cwiseAbs().maxCoeff() : 0.0;
    eq_consistent_ = res <= std::max(feas_tol, 1e-9 * (1.0 + b_free_.cwiseAbs().maxCoeff()));
  }
  const int nz = reduced_.uses_nullspace ? nf - rank_ : nf;

  Mat H_FF(nf, nf);
  Vec g_eff(nf);
  for (int a = 0; a < nf; ++a) {
    g_eff(a) = qp.g(free_[a]);
    for (int b = 0; b < nf; ++b) H_FF(a, b) = qp.H(free_[a], free_[b]);
    for (int c = 0; c < nX; ++c) g_eff(a) += qp.H(free_[a], fixed_[c]) * fixed_values_(c);
  }
  if (reduced_.uses_nullspace) {
    const Mat HZ = H_FF * Z_;
    reduced_.H = Z_.transpose() * HZ;
    reduced_.g = Z_.transpose() * (H_FF * x_p_ + g_eff);
    flops.gemm(nf, nz, nf);
    flops.gemm(nz, nz, nf);
  } else {
    reduced_.H = H_FF;
    reduced_.g = g_eff;
  }
  reduced_.H = 0.5 * (reduced_.H + reduced_.H.transpose());

  std::vector<Vec> rows;
  std::vector<double> rhs;
  auto push_dense = [&](const Vec& a, double h, ConstraintId id, double scale) {
    if (a.size() == 0 || a.cwiseAbs().maxCoeff() <= 1e-13 * (1.0 + scale)) {
      if (h < -feas_tol && !reduced_.trivially_infeasible) reduced_.trivially_infeasible = id;
      return;
    }
    rows.push_back(a);
    rhs.push_back(h);
    reduced_.rows.ids.push_back(id);
  };

  for (int i = 0; i < mg; ++i) {
    if (converted[i]) continue;
    const bool has_lo = std::isfinite(qp.c_lo(i));
    const bool has_hi = std::isfinite(qp.c_hi(i));
    if (!has_lo && !has_hi) continue;
    const Vec cF = C_F.row(i).transpose();
    const double shift = Cv(i) + cF.dot(x_p_);
    const Vec a = reduced_.uses_nullspace ? Vec(Z_.transpose() * cF) : cF;
    const double scale = n > 0 ? qp.C.row(i).cwiseAbs().maxCoeff() : 0.0;
    if (has_hi) push_dense(a, qp.c_hi(i) - shift, 2 * i + 1, scale);
    if (has_lo) push_dense(-a, -(qp.c_lo(i) - shift), 2 * i, scale);
  }
  if (reduced_.uses_nullspace) flops.gemm(static_cast<std::int64_t>(rows.size()), nz, nf);

  for (int f = 0; f < nf; ++f) {
    const int j = free_[f];
    const bool has_lo = std::isfinite(qp.x_lo(j));
    const bool has_hi = std::isfinite(qp.x_hi(j));
    const ConstraintId base = 2 * (mg + j);
    if (reduced_.uses_nullspace) {
      const Vec a = Z_.row(f).transpose();
      if (has_hi) push_dense(a, qp.x_hi(j) - x_p_(f), base + 1, 1.0);
      if (has_lo) push_dense(-a, -(qp.x_lo(j) - x_p_(f)), base, 1.0);
    } else {
      if (has_hi) {
        reduced_.rows.box_var.push_back(f);
        reduced_.rows.box_sign.push_back(1.0);
        rhs.push_back(qp.x_hi(j));
        reduced_.rows.box_ids.push_back(base + 1);
      }
      if (has_lo) {
        reduced_.rows.box_var.push_back(f);
        reduced_.rows.box_sign.push_back(-1.0);
        rhs.push_back(-qp.x_lo(j));
        reduced_.rows.box_ids.push_back(base);
      }
    }
  }

  const int md = static_cast<int>(rows.size());
  reduced_.rows.G.resize(md, nz);
  reduced_.rows.h.resize(md);
  for (int i = 0; i < md; ++i) {
    reduced_.rows.G.row(i) = rows[i].transpose();
    reduced_.rows.h(i) = rhs[i];
  }
  const int mb = reduced_.rows.num_box();
  reduced_.rows.box_h.resize(mb);
  for (int i = 0; i < mb; ++i) reduced_.rows.box_h(i) = rhs[md + i];
}

Vec Reduction::primal(const Vec& w) const {
  Vec x(qp_.num_vars());
  const Vec xf = reduced_.uses_nullspace ? Vec(x_p_ + Z_ * w) : w;
  for (std::size_t a = 0; a < free_.size(); ++a) x(free_[a]) = xf(static_cast<int>(a));
  for (std::size_t c = 0; c < fixed_.size(); ++c) x(fixed_[c]) = fixed_values_(static_cast<int>(c));
  return x;
}

Vec Reduction::reduce_primal(const Vec& x) const {
  Vec xf(static_cast<int>(free_.size()));
  for (std::size_t a = 0; a < free_.size(); ++a) xf(static_cast<int>(a)) = x(free_[a]);
  if (!reduced_.uses_nullspace) return xf;
  return Z_.transpose() * (xf - x_p_);
}

void Reduction::recover_duals(const Vec& x, const Vec& lambda, Vec& y, Vec& z, Vec& z_box) const {
  const int n = qp_.num_vars();
  const int mg = qp_.num_general();
  const int n_eq = qp_.num_eq();
  y = Vec::Zero(n_eq);
  z = Vec::Zero(mg);
  z_box = Vec::Zero(n);

  const auto& rows = reduced_.rows;
  for (int i = 0; i < rows.size(); ++i) {
    const ConstraintId id = rows.id(i);
    const double sgn = (id % 2 == 1) ? 1.0 : -1.0;
    const int k = id / 2;
    if (k < mg) {
      z(k) += sgn * lambda(i);
    } else {
      z_box(k - mg) += sgn * lambda(i);
    }
  }

  Vec v = qp_.H * x + qp_.g + z_box;
  if (mg > 0) v.noalias() += qp_.C.transpose() * z;

  if (rank_ > 0) {
    Vec vF(static_cast<int>(free_.size()));
    for (std::size_t a = 0; a < free_.size(); ++a) vF(static_cast<int>(a)) = -v(free_[a]);
    const Vec rhs = Q1_.transpose() * vF;
    Vec mu_p = Vec::Zero(A_free_.rows());
    mu_p.head(rank_) = R11_.triangularView<Eigen::Upper>().solve(rhs);
    const Vec mu = perm_ * mu_p;
    y = mu.head(n_eq);
    for (std::size_t r = 0; r < converted_rows_.size(); ++r) {
      z(converted_rows_[r]) = mu(n_eq + static_cast<int>(r));
    }
  }

  if (!fixed_.empty()) {
    Vec v2 = qp_.H * x + qp_.g + z_box;
    if (n_eq > 0) v2.noalias() += qp_.A_eq.transpose() * y;
    if (mg > 0) v2.noalias() += qp_.C.transpose() * z;
    for (int j : fixed_) z_box(j) = -v2(j);
  }
}

int Reduction::row_of(ConstraintId id) const {
  const auto& rows = reduced_.rows;
  for (int i = 0; i < rows.size(); ++i) {
    if (rows.id(i) == id) return i;
  }
  return -1;
}

}  // namespace quadqp::detail
