#pragma once

// Internal: reduction of a DenseQp to an inequality-only problem
//   min ½ wᵀHw + gᵀw   s.t.  a_iᵀw ≤ h_i
// by fixing variables with equal bounds, moving equal-bound general rows to
// the equalities and parametrizing the equality manifold as x = x_p + Z w.

#include "quadqp/flops.hpp"
#include "quadqp/qp_types.hpp"

#include <optional>
#include <vector>

namespace quadqp::detail {

/// One-sided rows, either dense (`a` row of G) or a signed unit row on a
/// single reduced variable.
struct OneSidedRows {
  Mat G;
  Vec h;
  std::vector<ConstraintId> ids;
  std::vector<int> box_var;
  std::vector<double> box_sign;
  Vec box_h;
  std::vector<ConstraintId> box_ids;

  [[nodiscard]] int num_dense() const { return static_cast<int>(G.rows()); }
  [[nodiscard]] int num_box() const { return static_cast<int>(box_var.size()); }
  [[nodiscard]] int size() const { return num_dense() + num_box(); }

  /// Row values a_iᵀw for all rows (dense first, then box).
  [[nodiscard]] Vec values(const Vec& w) const;
  /// out += Σ_i a_i v_i
  void add_transpose_times(const Vec& v, Vec& out) const;
  [[nodiscard]] ConstraintId id(int i) const {
    return i < num_dense() ? ids[i] : box_ids[i - num_dense()];
  }
};

struct ReducedQp {
  Mat H;
  Vec g;
  OneSidedRows rows;
  /// Stationarity is reported with ‖·‖₂ when Z is not the identity.
  bool uses_nullspace = false;
  /// Certificate when a row with vanishing coefficients is violated.
  std::optional<ConstraintId> trivially_infeasible;
};

class Reduction {
 public:
  /// With `fix_equal_bounds` false, variables with lo == hi stay free and
  /// keep both of their bound rows.
  Reduction(const DenseQp& qp, double feas_tol, FlopCounter& flops, bool fix_equal_bounds = true);

  [[nodiscard]] const ReducedQp& reduced() const { return reduced_; }
  /// Full-space primal from reduced coordinates.
  [[nodiscard]] Vec primal(const Vec& w) const;
  /// Reduced coordinates of a full-space primal (least squares).
  [[nodiscard]] Vec reduce_primal(const Vec& x) const;
  [[nodiscard]] bool equalities_consistent() const { return eq_consistent_; }

  /// Recover (y, z, z_box) of the original problem from the reduced multipliers.
  void recover_duals(const Vec& x, const Vec& lambda, Vec& y, Vec& z, Vec& z_box) const;

  /// Index of the reduced row with the given original id, or -1.
  [[nodiscard]] int row_of(ConstraintId id) const;

 private:
  const DenseQp& qp_;
  ReducedQp reduced_;
  std::vector<int> free_;
  std::vector<int> fixed_;
  Vec fixed_values_;
  std::vector<int> converted_rows_;  // general rows with lo == hi
  Mat A_free_;                       // stacked equality rows on free variables
  Vec b_free_;
  Mat Q1_, Z_;
  Mat R11_;
  Eigen::PermutationMatrix<Eigen::Dynamic> perm_;
  int rank_ = 0;
  Vec x_p_;
  bool eq_consistent_ = true;
};

bool equal_bounds(double lo, double hi);

/// Largest α ∈ (0, 1] with v + α dv ≥ 0 (componentwise).
double max_step(const Vec& v, const Vec& dv);

}  // namespace quadqp::detail
