#pragma once

#include "quadqp/qp_types.hpp"

namespace quadqp {

/// KKT residuals (∞-norms) of a primal-dual point for a DenseQp, computed
/// from problem data only.
///   stationarity     ‖Hx + g + A_eqᵀy + Cᵀz + z_box‖
///   primal           equality residual and bound violations
///   dual             wrong-signed multipliers (z > 0 on a missing upper side, ...)
///   complementarity  |z⁺ (hi − Cx)| and |z⁻ (Cx − lo)| over finite sides
KktResiduals kkt_residuals(const DenseQp& qp, const Vec& x, const Vec& y, const Vec& z,
                           const Vec& z_box);

/// Same quantities for a stagewise problem with the flattened layout used by
/// `flatten` (duals: initial condition then dynamics; general rows stage by
/// stage; box duals per variable, zero on states).
KktResiduals kkt_residuals(const StagewiseQp& qp, const Vec& x, const Vec& y, const Vec& z,
                           const Vec& z_box);

}  // namespace quadqp
