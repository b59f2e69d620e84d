#include "quadqp/instance_io.hpp"

#include "json_util.hpp"

#include <fstream>
#include <sstream>

namespace quadqp::io {

using detail::field;
using detail::int_field;
using detail::json;
using detail::mat_from_json;
using detail::vec_from_json;

namespace {

json state_json(const srbd::SrbdState& s) {
  return detail::to_json(Vec(s.to_vector()));
}

srbd::SrbdState state_from(const json& j, const std::string& what) {
  const Vec v = vec_from_json(j, what, std::nan(""));
  if (v.size() != srbd::kStateDim) throw DimensionError("'" + what + "' must have 13 entries");
  if (!v.allFinite()) throw InputError("'" + what + "' must be finite");
  return srbd::SrbdState::from_vector(v);
}

Vec3 vec3_from(const json& j, const std::string& what) {
  const Vec v = vec_from_json(j, what, std::nan(""));
  if (v.size() != 3 || !v.allFinite()) throw InputError("'" + what + "' must be 3 finite numbers");
  return v;
}

double number(const json& j, const std::string& key) {
  const json& v = field(j, key);
  if (!v.is_number()) throw InputError("'" + key + "' must be a number");
  return v.get<double>();
}

json stage_json(const QpStage& s) {
  return {{"nx", s.nx()},
          {"nu", s.nu()},
          {"ng", s.ng()},
          {"nx_next", static_cast<int>(s.A.rows())},
          {"A", detail::to_json(s.A)},
          {"B", detail::to_json(s.B)},
          {"b", detail::to_json(s.b)},
          {"Q", detail::to_json(s.Q)},
          {"S", detail::to_json(s.S)},
          {"R", detail::to_json(s.R)},
          {"q", detail::to_json(s.q)},
          {"r", detail::to_json(s.r)},
          {"u_lo", detail::to_json(s.u_lo)},
          {"u_hi", detail::to_json(s.u_hi)},
          {"C", detail::to_json(s.C)},
          {"D", detail::to_json(s.D)},
          {"lo", detail::to_json(s.lo)},
          {"hi", detail::to_json(s.hi)}};
}

Vec finite_vec(const json& j, const std::string& key, int size) {
  const Vec v = vec_from_json(field(j, key), key, std::nan(""));
  if (v.size() != size) throw DimensionError("'" + key + "' has wrong length");
  if (!v.allFinite()) throw InputError("'" + key + "' must be finite");
  return v;
}

Vec bound_vec(const json& j, const std::string& key, int size, double null_value) {
  const Vec v = vec_from_json(field(j, key), key, null_value);
  if (v.size() != size) throw DimensionError("'" + key + "' has wrong length");
  if (v.hasNaN()) throw InputError("'" + key + "' contains NaN");
  return v;
}

QpStage stage_from(const json& j) {
  const int nx = int_field(j, "nx"), nu = int_field(j, "nu"), ng = int_field(j, "ng");
  const int nn = int_field(j, "nx_next");
  QpStage s;
  s.A = mat_from_json(field(j, "A"), nn, nx, "A");
  s.B = mat_from_json(field(j, "B"), nn, nu, "B");
  s.b = finite_vec(j, "b", nn);
  s.Q = mat_from_json(field(j, "Q"), nx, nx, "Q");
  s.S = mat_from_json(field(j, "S"), nu, nx, "S");
  s.R = mat_from_json(field(j, "R"), nu, nu, "R");
  s.q = finite_vec(j, "q", nx);
  s.r = finite_vec(j, "r", nu);
  s.u_lo = bound_vec(j, "u_lo", nu, -kInf);
  s.u_hi = bound_vec(j, "u_hi", nu, kInf);
  s.C = mat_from_json(field(j, "C"), ng, nx, "C");
  s.D = mat_from_json(field(j, "D"), ng, nu, "D");
  s.lo = bound_vec(j, "lo", ng, -kInf);
  s.hi = bound_vec(j, "hi", ng, kInf);
  return s;
}

}  // namespace

std::string to_json(const MpcTick& t) {
  json j;
  j["kind"] = "mpc_tick";
  j["scenario"] = t.scenario;
  j["tick"] = t.tick;
  j["time"] = t.time;
  j["current"] = state_json(t.current);
  const auto& p = t.params;
  j["params"] = {{"mass", p.mass},
                 {"body_inertia", detail::to_json(Mat(p.body_inertia))},
                 {"friction_coefficient", p.friction_coefficient},
                 {"force_min", detail::to_json(Vec(p.force_min))},
                 {"force_max", detail::to_json(Vec(p.force_max))},
                 {"dt", p.dt}};
  json g;
  g["horizon"] = t.gait.horizon;
  g["dt"] = t.gait.dt;
  g["contacts"] = json::array();
  g["feet"] = json::array();
  g["targets"] = json::array();
  for (const auto& c : t.gait.contacts) g["contacts"].push_back({c[0], c[1], c[2], c[3]});
  for (const auto& f : t.gait.feet) {
    json a = json::array();
    for (const auto& r : f) a.push_back({r.x(), r.y(), r.z()});
    g["feet"].push_back(a);
  }
  for (const auto& s : t.gait.targets) g["targets"].push_back(state_json(s));
  j["gait"] = g;
  return j.dump();
}

std::string to_json(const StagewiseQp& qp) {
  json j;
  j["kind"] = "stagewise";
  j["x0"] = detail::to_json(qp.x0);
  j["constant"] = qp.constant;
  j["stages"] = json::array();
  for (const auto& s : qp.stages) j["stages"].push_back(stage_json(s));
  return j.dump();
}

std::string to_json(const DenseQp& qp) {
  json j;
  j["kind"] = "dense";
  j["n"] = qp.num_vars();
  j["H"] = detail::to_json(qp.H);
  j["g"] = detail::to_json(qp.g);
  j["constant"] = qp.constant;
  j["A_eq"] = detail::to_json(qp.A_eq);
  j["b_eq"] = detail::to_json(qp.b_eq);
  j["C"] = detail::to_json(qp.C);
  j["c_lo"] = detail::to_json(qp.c_lo);
  j["c_hi"] = detail::to_json(qp.c_hi);
  j["x_lo"] = detail::to_json(qp.x_lo);
  j["x_hi"] = detail::to_json(qp.x_hi);
  return j.dump();
}

Instance parse_instance(const std::string& json_text) {
  const json j = detail::parse_json(json_text);
  const json& kind_j = field(j, "kind");
  if (!kind_j.is_string()) throw InputError("instance: 'kind' must be a string");
  const std::string kind = kind_j.get<std::string>();

  if (kind == "mpc_tick") {
    MpcTick t;
    const json& sc = field(j, "scenario");
    t.scenario = sc.is_string() ? sc.get<std::string>() : "";
    t.tick = int_field(j, "tick");
    t.time = number(j, "time");
    t.current = state_from(field(j, "current"), "current");
    const json& p = field(j, "params");
    t.params.mass = number(p, "mass");
    t.params.body_inertia = mat_from_json(field(p, "body_inertia"), 3, 3, "body_inertia");
    t.params.friction_coefficient = number(p, "friction_coefficient");
    t.params.force_min = vec3_from(field(p, "force_min"), "force_min");
    t.params.force_max = vec3_from(field(p, "force_max"), "force_max");
    t.params.dt = number(p, "dt");
    t.params.validate();
    const json& g = field(j, "gait");
    t.gait.horizon = int_field(g, "horizon");
    t.gait.dt = number(g, "dt");
    for (const auto& c : field(g, "contacts")) {
      if (!c.is_array() || c.size() != 4) throw InputError("gait: contacts need 4 flags per stage");
      mpc::ContactFlags f{};
      for (int k = 0; k < 4; ++k) {
        if (!c[k].is_boolean()) throw InputError("gait: contact flags must be booleans");
        f[k] = c[k].get<bool>();
      }
      t.gait.contacts.push_back(f);
    }
    for (const auto& f : field(g, "feet")) {
      if (!f.is_array() || f.size() != 4) throw InputError("gait: feet need 4 points per stage");
      srbd::FootPositions fp;
      for (int k = 0; k < 4; ++k) fp[k] = vec3_from(f[k], "feet");
      t.gait.feet.push_back(fp);
    }
    for (const auto& s : field(g, "targets")) t.gait.targets.push_back(state_from(s, "targets"));
    t.gait.validate();
    return t;
  }
  if (kind == "stagewise") {
    StagewiseQp qp;
    const json& stages = field(j, "stages");
    if (!stages.is_array() || stages.empty()) throw InputError("stagewise: 'stages' must be a non-empty array");
    for (const auto& s : stages) qp.stages.push_back(stage_from(s));
    qp.x0 = vec_from_json(field(j, "x0"), "x0", std::nan(""));
    if (!qp.x0.allFinite()) throw InputError("stagewise: x0 must be finite");
    qp.constant = number(j, "constant");
    qp.validate();
    return qp;
  }
  if (kind == "dense") {
    const int n = int_field(j, "n");
    DenseQp qp;
    qp.H = mat_from_json(field(j, "H"), n, n, "H");
    qp.g = finite_vec(j, "g", n);
    qp.constant = number(j, "constant");
    qp.A_eq = detail::mat_from_json_cols(field(j, "A_eq"), n, "A_eq");
    if (qp.A_eq.size() == 0) qp.A_eq = Mat(0, n);
    qp.b_eq = finite_vec(j, "b_eq", static_cast<int>(qp.A_eq.rows()));
    qp.C = detail::mat_from_json_cols(field(j, "C"), n, "C");
    if (qp.C.size() == 0) qp.C = Mat(0, n);
    const int m = static_cast<int>(qp.C.rows());
    qp.c_lo = bound_vec(j, "c_lo", m, -kInf);
    qp.c_hi = bound_vec(j, "c_hi", m, kInf);
    qp.x_lo = bound_vec(j, "x_lo", n, -kInf);
    qp.x_hi = bound_vec(j, "x_hi", n, kInf);
    qp.validate();
    return qp;
  }
  throw InputError("instance: unknown kind '" + kind + "'");
}

Instance load_instance(const std::string& path) {
  return parse_instance(read_file(path));
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace quadqp::io
