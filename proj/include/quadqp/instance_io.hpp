#pragma once

#include "quadqp/mpc_qp.hpp"
#include "quadqp/qp_types.hpp"

#include <string>
#include <variant>

namespace quadqp::io {

/// One MPC tick: enough to rebuild the sparse QP with build_mpc_qp.
struct MpcTick {
  std::string scenario;
  int tick = 0;
  double time = 0.0;
  srbd::SrbdState current;
  mpc::GaitSequence gait;
  srbd::SrbdParams params;
};

/// Instance files hold one of: an MPC tick ("mpc_tick"), a stagewise QP
/// ("stagewise") or a flat QP ("dense"). Matrices are flat row-major arrays
/// and infinite bounds are null.
using Instance = std::variant<MpcTick, StagewiseQp, DenseQp>;

std::string to_json(const MpcTick& tick);
std::string to_json(const StagewiseQp& qp);
std::string to_json(const DenseQp& qp);

Instance parse_instance(const std::string& json_text);
Instance load_instance(const std::string& path);

/// Writes text to a file, throwing InputError when it cannot be opened.
void write_file(const std::string& path, const std::string& text);
std::string read_file(const std::string& path);

}  // namespace quadqp::io
