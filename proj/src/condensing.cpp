#include "quadqp/condensing.hpp"

#include <string>

namespace quadqp::condensing {

int Partition::block_start(int i) const {
  int s = 0;
  for (int b = 0; b < i; ++b) s += blocks[b];
  return s;
}

Partition partition(int N, int Np) {
  if (N < 1 || Np < 1 || Np > N) {
    throw InputError("partition: need 1 <= Np <= N, got N=" + std::to_string(N) +
                     " Np=" + std::to_string(Np));
  }
  Partition p;
  p.N = N;
  const int base = N / Np;
  const int rem = N % Np;
  p.blocks.assign(Np, base);
  for (int i = 0; i < rem; ++i) ++p.blocks[i];
  return p;
}

InputOrigin CondensedMap::origin(int block, int local) const {
  const auto& b = blocks.at(block);
  for (int j = 0; j < b.size; ++j) {
    if (local < b.input_offset[j] + b.input_size[j]) return {b.start + j, local - b.input_offset[j]};
  }
  throw InputError("CondensedMap::origin: index out of range");
}

namespace {

BlockPrediction predict_block(const StagewiseQp& qp, int start, int size) {
  BlockPrediction bp;
  bp.start = start;
  bp.size = size;
  for (int j = 0; j < size; ++j) {
    bp.input_offset.push_back(bp.num_inputs);
    bp.input_size.push_back(qp.stages[start + j].nu());
    bp.num_inputs += qp.stages[start + j].nu();
  }
  const int nxh = qp.stages[start].nx();
  bp.gamma.push_back(Mat::Identity(nxh, nxh));
  bp.phi.push_back(Mat::Zero(nxh, bp.num_inputs));
  bp.offset.push_back(Vec::Zero(nxh));
  for (int j = 0; j < size; ++j) {
    const auto& s = qp.stages[start + j];
    Mat phi_next = s.A * bp.phi[j];
    phi_next.middleCols(bp.input_offset[j], s.nu()) += s.B;
    bp.gamma.push_back(s.A * bp.gamma[j]);
    bp.phi.push_back(std::move(phi_next));
    bp.offset.push_back(s.A * bp.offset[j] + s.b);
  }
  return bp;
}

QpStage condense_block(const StagewiseQp& qp, const BlockPrediction& bp, double& constant) {
  const int nxh = qp.stages[bp.start].nx();
  const int nU = bp.num_inputs;
  const int nz = nxh + nU;
  const int nx_next = (bp.start + bp.size <= qp.horizon()) ? qp.stages[bp.start + bp.size].nx() : 0;

  int ng = 0;
  for (int j = 0; j < bp.size; ++j) ng += qp.stages[bp.start + j].ng();

  QpStage out = QpStage::zeros(nxh, nU, nx_next, ng);
  Mat Hz = Mat::Zero(nz, nz);
  Vec gz = Vec::Zero(nz);

  int row = 0;
  for (int j = 0; j < bp.size; ++j) {
    const auto& s = qp.stages[bp.start + j];
    const int nu = s.nu();
    const int io = nxh + bp.input_offset[j];

    Mat T(s.nx(), nz);
    T << bp.gamma[j], bp.phi[j];
    const Vec& c = bp.offset[j];

    const Mat QT = s.Q * T;
    Hz.noalias() += T.transpose() * QT;
    const Mat ST = s.S * T;
    Hz.middleRows(io, nu) += ST;
    Hz.middleCols(io, nu) += ST.transpose();
    Hz.block(io, io, nu, nu) += s.R;

    const Vec Qc_q = s.Q * c + s.q;
    gz.noalias() += T.transpose() * Qc_q;
    gz.segment(io, nu) += s.S * c + s.r;
    constant += 0.5 * c.dot(s.Q * c) + s.q.dot(c);

    out.u_lo.segment(bp.input_offset[j], nu) = s.u_lo;
    out.u_hi.segment(bp.input_offset[j], nu) = s.u_hi;

    const int g = s.ng();
    if (g > 0) {
      out.C.middleRows(row, g) = s.C * bp.gamma[j];
      Mat Dz = s.C * bp.phi[j];
      Dz.middleCols(bp.input_offset[j], nu) += s.D;
      out.D.middleRows(row, g) = Dz;
      const Vec shift = s.C * c;
      out.lo.segment(row, g) = s.lo - shift;
      out.hi.segment(row, g) = s.hi - shift;
      row += g;
    }
  }

  out.Q = Hz.topLeftCorner(nxh, nxh);
  out.S = Hz.bottomLeftCorner(nU, nxh);
  out.R = Hz.bottomRightCorner(nU, nU);
  out.q = gz.head(nxh);
  out.r = gz.tail(nU);
  out.A = bp.gamma[bp.size];
  out.B = bp.phi[bp.size];
  out.b = bp.offset[bp.size];
  return out;
}

}  // namespace

CondensedStagewise condense(const StagewiseQp& qp, const Partition& part) {
  qp.validate();
  const int N = qp.horizon();
  if (part.N != N) throw DimensionError("condense: partition horizon differs from problem horizon");
  int total = 0;
  for (int b : part.blocks) {
    if (b < 1) throw InputError("condense: empty block");
    total += b;
  }
  if (total != N) throw DimensionError("condense: partition blocks do not sum to N");

  CondensedStagewise out;
  out.map.N = N;
  out.qp.x0 = qp.x0;
  out.qp.constant = qp.constant;

  int start = 0;
  for (int size : part.blocks) {
    BlockPrediction bp = predict_block(qp, start, size);
    out.qp.stages.push_back(condense_block(qp, bp, out.qp.constant));
    out.map.blocks.push_back(std::move(bp));
    start += size;
  }
  out.qp.stages.push_back(qp.stages[N]);
  return out;
}

CondensedDense full_condense(const StagewiseQp& qp) {
  CondensedStagewise one = condense(qp, partition(qp.horizon(), 1));
  const QpStage& blk = one.qp.stages[0];
  const QpStage& term = one.qp.stages[1];
  const Vec& x0 = qp.x0;

  const int nU = blk.nu();
  const int ng = blk.ng() + term.ng();
  CondensedDense out;
  out.map = std::move(one.map);
  out.map.dense = true;

  DenseQp& d = out.qp;
  d = DenseQp::with_dims(nU, 0, ng);
  const Vec xN_off = blk.A * x0 + blk.b;
  d.H = blk.R + blk.B.transpose() * term.Q * blk.B;
  d.g = blk.r + blk.S * x0 + blk.B.transpose() * (term.Q * xN_off + term.q);
  d.constant = one.qp.constant + 0.5 * x0.dot(blk.Q * x0) + blk.q.dot(x0) +
               0.5 * xN_off.dot(term.Q * xN_off) + term.q.dot(xN_off);
  d.x_lo = blk.u_lo;
  d.x_hi = blk.u_hi;

  const int g0 = blk.ng();
  if (g0 > 0) {
    d.C.topRows(g0) = blk.D;
    const Vec shift = blk.C * x0;
    d.c_lo.head(g0) = blk.lo - shift;
    d.c_hi.head(g0) = blk.hi - shift;
  }
  const int gN = term.ng();
  if (gN > 0) {
    d.C.bottomRows(gN) = term.C * blk.B;
    const Vec shift = term.C * xN_off;
    d.c_lo.tail(gN) = term.lo - shift;
    d.c_hi.tail(gN) = term.hi - shift;
  }
  d.H = 0.5 * (d.H + d.H.transpose());
  return out;
}

std::vector<Vec> extract_inputs(const Vec& primal, const CondensedMap& map, const StagewiseQp& qp) {
  if (map.N != qp.horizon()) throw DimensionError("extract_inputs: map/problem horizon mismatch");
  std::vector<Vec> u(map.N);
  int off = 0;
  for (const auto& bp : map.blocks) {
    if (!map.dense) off += qp.stages[bp.start].nx();
    if (off + bp.num_inputs > primal.size()) throw DimensionError("extract_inputs: primal too short");
    for (int j = 0; j < bp.size; ++j) {
      const int k = bp.start + j;
      if (bp.input_size[j] != qp.stages[k].nu()) throw DimensionError("extract_inputs: input size mismatch");
      u[k] = primal.segment(off + bp.input_offset[j], bp.input_size[j]);
    }
    off += bp.num_inputs;
  }
  if (!map.dense) off += qp.stages[map.N].nx();
  if (off != primal.size()) throw DimensionError("extract_inputs: primal size does not match map");
  return u;
}

Trajectory expand_solution(const QpSolution& sol, const CondensedMap& map, const StagewiseQp& qp) {
  Trajectory t;
  t.u = extract_inputs(sol.primal, map, qp);
  t.x.resize(map.N + 1);
  t.x[0] = qp.x0;
  for (int k = 0; k < map.N; ++k) {
    const auto& s = qp.stages[k];
    t.x[k + 1] = s.A * t.x[k] + s.B * t.u[k] + s.b;
  }
  t.objective = stagewise_objective(qp, t.x, t.u);
  return t;
}

Trajectory split_stagewise(const Vec& primal, const StagewiseQp& qp) {
  const int N = qp.horizon();
  if (primal.size() != qp.num_vars()) throw DimensionError("split_stagewise: size mismatch");
  Trajectory t;
  t.x.resize(N + 1);
  t.u.resize(N);
  int off = 0;
  for (int k = 0; k <= N; ++k) {
    const int nx = qp.stages[k].nx(), nu = qp.stages[k].nu();
    t.x[k] = primal.segment(off, nx);
    off += nx;
    if (k < N) t.u[k] = primal.segment(off, nu);
    off += nu;
  }
  t.objective = stagewise_objective(qp, t.x, t.u);
  return t;
}

double dynamics_residual(const Trajectory& traj, const StagewiseQp& qp) {
  double r = qp.x0.size() ? (traj.x[0] - qp.x0).cwiseAbs().maxCoeff() : 0.0;
  for (int k = 0; k < qp.horizon(); ++k) {
    const auto& s = qp.stages[k];
    const Vec e = traj.x[k + 1] - (s.A * traj.x[k] + s.B * traj.u[k] + s.b);
    if (e.size() > 0) r = std::max(r, e.cwiseAbs().maxCoeff());
  }
  return r;
}

}  // namespace quadqp::condensing
