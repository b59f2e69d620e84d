#include "quadqp/gait_scheduler.hpp"

#include "json_util.hpp"

#include <algorithm>

namespace quadqp::gait {

using srbd::FootPositions;
using srbd::SrbdState;

std::string to_string(GaitType g) {
  return g == GaitType::kStand ? "stand" : "trot";
}

GaitType gait_from_string(const std::string& s) {
  if (s == "stand") return GaitType::kStand;
  if (s == "trot") return GaitType::kTrot;
  throw InputError("unknown gait '" + s + "'");
}

void GaitParams::validate() const {
  if (!(dt > 0.0)) throw ParameterError("GaitParams: dt must be positive");
  if (horizon < 1) throw ParameterError("GaitParams: horizon must be >= 1");
  if (gait == GaitType::kTrot && !(stance_duration > 0.0 && swing_duration > 0.0)) {
    throw ParameterError("GaitParams: trot needs positive stance and swing durations");
  }
  for (double o : phase_offsets) {
    if (!(o >= 0.0 && o < 1.0)) throw ParameterError("GaitParams: phase offsets must lie in [0, 1)");
  }
}

namespace {

struct Quantized {
  int cycle_stages;
  int stance_stages;
};

Quantized quantize(const GaitParams& p) {
  const int n = std::max(2, static_cast<int>(std::lround(p.cycle() / p.dt)));
  const int s = std::clamp(static_cast<int>(std::lround(p.duty() * n)), 1, n - 1);
  return {n, s};
}

}  // namespace

std::vector<mpc::ContactFlags> contact_flags(const GaitParams& params, double phase) {
  params.validate();
  if (!(phase >= 0.0 && phase < 1.0)) throw InputError("contact_flags: phase must lie in [0, 1)");
  std::vector<mpc::ContactFlags> flags(params.horizon, mpc::ContactFlags{true, true, true, true});
  if (params.gait == GaitType::kStand) return flags;
  const auto q = quantize(params);
  const int p0 = static_cast<int>(std::lround(phase * q.cycle_stages));
  for (int k = 0; k < params.horizon; ++k) {
    for (int j = 0; j < 4; ++j) {
      const int off = static_cast<int>(std::lround(params.phase_offsets[j] * q.cycle_stages));
      flags[k][j] = (p0 + k + off) % q.cycle_stages < q.stance_stages;
    }
  }
  return flags;
}

const Command& CommandProfile::at(double t) const {
  if (segments.empty()) throw InputError("CommandProfile: no segments");
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const auto i = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
  return segments[i];
}

void CommandProfile::validate(const CommandLimits& limits) const {
  if (segments.empty() || times.size() != segments.size()) {
    throw InputError("CommandProfile: need one time stamp per segment");
  }
  if (times.front() != 0.0) throw InputError("CommandProfile: first segment must start at 0");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw InputError("CommandProfile: time stamps must increase");
  }
  if (!(duration > times.back())) throw InputError("CommandProfile: duration must exceed the last stamp");
  if (!(nominal_height > 0.0)) throw InputError("CommandProfile: nominal height must be positive");
  const double eps = 1e-12;
  for (const auto& c : segments) {
    if (std::hypot(c.vx, c.vy) > limits.speed + eps || std::abs(c.yaw_rate) > limits.yaw_rate + eps ||
        std::abs(c.height_offset) > limits.height_offset + eps || std::abs(c.roll) > limits.tilt + eps ||
        std::abs(c.pitch) > limits.tilt + eps) {
      throw InputError("CommandProfile '" + name + "': command outside limits");
    }
  }
}

namespace {

constexpr double kDeg = M_PI / 180.0;

struct Piece {
  double length;
  std::vector<std::pair<double, Command>> parts;  // (duration, command)
};

Piece single(double length, Command c) { return {length, {{length, c}}}; }

CommandProfile assemble(const std::string& name, double duration, double rest_start,
                        const std::vector<Piece>& sweep) {
  CommandProfile p;
  p.name = name;
  p.duration = duration;
  double t = 0.0;
  p.times.push_back(t);
  p.segments.push_back({});
  t += rest_start;
  for (const auto& piece : sweep) {
    for (const auto& [len, c] : piece.parts) {
      p.times.push_back(t);
      p.segments.push_back(c);
      t += len;
    }
  }
  p.times.push_back(t);
  p.segments.push_back({});
  p.validate();
  return p;
}

}  // namespace

CommandProfile scenario(const std::string& name, std::uint64_t seed) {
  std::vector<Piece> sweep;
  double duration = 0.0;
  if (name == "trotting") {
    duration = 40.0;
    const double w = 40.0 * kDeg;
    sweep = {single(4, {0.25, 0, 0, 0, 0, 0}),     single(4, {0.5, 0, 0, 0, 0, 0}),
             single(4, {0.3, 0, w, 0, 0, 0}),      single(4, {0, 0, -w, 0, 0, 0}),
             single(4, {0, 0.3, 0, 0, 0, 0}),      single(4, {0, -0.3, 0, 0, 0, 0}),
             single(4, {-0.3, 0, 0, 0, 0, 0}),     single(4, {0.4, 0.3, 0, 0, 0, 0}),
             single(3, {0.2, 0, 0.5 * w, 0, 0, 0})};
  } else if (name == "standing") {
    duration = 20.0;
    const double a = 30.0 * kDeg;
    const double r = 20.0 * kDeg;  // yaw sweep 0 → +30° → −30° → 0
    sweep = {single(1.5, {0, 0, 0, 0.1, 0, 0}),  single(1.5, {0, 0, 0, -0.1, 0, 0}),
             single(1.5, {0, 0, 0, 0, a, 0}),    single(1.5, {0, 0, 0, 0, -a, 0}),
             single(1.5, {0, 0, 0, 0, 0, a}),    single(1.5, {0, 0, 0, 0, 0, -a}),
             Piece{6.0, {{1.5, {0, 0, r, 0, 0, 0}}, {3.0, {0, 0, -r, 0, 0, 0}}, {1.5, {0, 0, r, 0, 0, 0}}}}};
  } else {
    throw InputError("unknown scenario '" + name + "' (expected trotting or standing)");
  }
  if (seed != 0) {
    std::mt19937_64 rng(seed);
    std::shuffle(sweep.begin(), sweep.end(), rng);
  }
  return assemble(name, duration, 2.0, sweep);
}

CommandProfile parse_profile(const std::string& json_text) {
  using namespace detail;
  const json j = parse_json(json_text);
  CommandProfile p;
  const json& name = field(j, "name");
  if (!name.is_string()) throw InputError("profile: name must be a string");
  p.name = name.get<std::string>();
  auto number = [](const json& o, const std::string& key, double fallback) {
    if (!o.contains(key)) return fallback;
    if (!o.at(key).is_number()) throw InputError("profile: '" + key + "' must be a number");
    return o.at(key).get<double>();
  };
  p.duration = number(j, "duration", 0.0);
  p.nominal_height = number(j, "nominal_height", 0.3);
  const json& segs = field(j, "segments");
  if (!segs.is_array()) throw InputError("profile: segments must be an array");
  for (const auto& s : segs) {
    if (!s.is_object()) throw InputError("profile: segment must be an object");
    p.times.push_back(number(s, "t", std::nan("")));
    p.segments.push_back({number(s, "vx", 0), number(s, "vy", 0), number(s, "yaw_rate", 0),
                          number(s, "height_offset", 0), number(s, "roll", 0), number(s, "pitch", 0)});
  }
  p.validate();
  return p;
}

std::string profile_to_json(const CommandProfile& profile) {
  detail::json j;
  j["name"] = profile.name;
  j["duration"] = profile.duration;
  j["nominal_height"] = profile.nominal_height;
  j["segments"] = detail::json::array();
  for (std::size_t i = 0; i < profile.segments.size(); ++i) {
    const auto& c = profile.segments[i];
    j["segments"].push_back({{"t", profile.times[i]},
                             {"vx", c.vx},
                             {"vy", c.vy},
                             {"yaw_rate", c.yaw_rate},
                             {"height_offset", c.height_offset},
                             {"roll", c.roll},
                             {"pitch", c.pitch}});
  }
  return j.dump(2);
}

std::vector<SrbdState> reference_states(const SrbdState& current, const CommandProfile& profile, double t0, int N,
                                        double dt) {
  if (N < 1 || !(dt > 0.0)) throw InputError("reference_states: need N >= 1 and dt > 0");
  if (!current.to_vector().allFinite() || !std::isfinite(t0)) throw InputError("reference_states: non-finite input");
  std::vector<SrbdState> out;
  out.reserve(N);
  Vec3 pos = current.position;
  double yaw = current.yaw();
  for (int k = 0; k < N; ++k) {
    const Command& c = profile.at(t0 + k * dt);
    const Vec3 v = rot_z(yaw) * Vec3(c.vx, c.vy, 0.0);
    pos += v * dt;
    yaw += c.yaw_rate * dt;
    SrbdState s;
    s.orientation = Vec3(c.roll, c.pitch, yaw);
    s.position = Vec3(pos.x(), pos.y(), profile.nominal_height + c.height_offset);
    s.angular_velocity = Vec3(0.0, 0.0, c.yaw_rate);
    s.linear_velocity = v;
    s.gravity = current.gravity;
    out.push_back(s);
  }
  return out;
}

FootPositions hips_on_ground(const SrbdState& state, const Geometry& geometry) {
  const Mat3 R = rot_z(state.yaw());
  FootPositions f;
  for (int j = 0; j < 4; ++j) {
    f[j] = state.position + R * geometry.hip_offsets[j];
    f[j].z() = 0.0;
  }
  return f;
}

std::vector<FootPositions> foothold_positions(const SrbdState& current, const std::vector<mpc::ContactFlags>& flags,
                                              const std::vector<SrbdState>& targets, const GaitParams& params,
                                              const Geometry& geometry, const FootPositions& current_feet,
                                              const mpc::ContactFlags& previous_flags) {
  require_dims(flags.size() == targets.size() && !flags.empty(), "foothold_positions: flags/targets length");
  std::vector<FootPositions> out(flags.size());
  for (std::size_t k = 0; k < flags.size(); ++k) {
    const SrbdState& s = k == 0 ? current : targets[k - 1];
    FootPositions land = hips_on_ground(s, geometry);
    const Vec3 shift = 0.5 * params.stance_duration * Vec3(s.linear_velocity.x(), s.linear_velocity.y(), 0.0);
    for (auto& f : land) f += shift;
    for (int j = 0; j < 4; ++j) {
      const bool was_stance = k == 0 ? previous_flags[j] : flags[k - 1][j];
      const FootPositions& prev = k == 0 ? current_feet : out[k - 1];
      out[k][j] = flags[k][j] && was_stance ? prev[j] : land[j];
    }
  }
  return out;
}

GaitParams scenario_gait(const std::string& name, int horizon) {
  GaitParams p;
  p.horizon = horizon;
  if (name == "standing") {
    p.gait = GaitType::kStand;
  } else if (name == "trotting") {
    p.gait = GaitType::kTrot;
  } else {
    throw InputError("unknown scenario '" + name + "'");
  }
  return p;
}

ScenarioStream::ScenarioStream(CommandProfile profile, GaitParams params, Geometry geometry, StreamOptions options)
    : profile_(std::move(profile)),
      params_(params),
      geometry_(geometry),
      options_(options),
      rng_(options.seed) {
  params_.validate();
  profile_.validate();
  num_ticks_ = static_cast<int>(std::floor(profile_.duration / params_.dt + 1e-9));
  state_.position = Vec3(0.0, 0.0, profile_.nominal_height);
  feet_ = hips_on_ground(state_, geometry_);
  last_flags_ = {true, true, true, true};
}

Tick ScenarioStream::next() {
  if (done()) throw InputError("ScenarioStream: no ticks left");
  Tick t;
  t.index = index_;
  t.time = index_ * params_.dt;
  t.current = state_;

  const auto q = quantize(params_);
  const double phase = static_cast<double>(index_ % q.cycle_stages) / q.cycle_stages;
  auto& g = t.gait;
  g.horizon = params_.horizon;
  g.dt = params_.dt;
  g.contacts = contact_flags(params_, phase);
  g.targets = reference_states(state_, profile_, t.time, params_.horizon, params_.dt);
  g.feet = foothold_positions(state_, g.contacts, g.targets, params_, geometry_, feet_, last_flags_);

  feet_ = g.feet[0];
  last_flags_ = g.contacts[0];
  state_ = g.targets[0];
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  if (options_.position_noise > 0.0) {
    for (int i = 0; i < 3; ++i) state_.position(i) += options_.position_noise * ud(rng_);
  }
  if (options_.velocity_noise > 0.0) {
    for (int i = 0; i < 3; ++i) state_.linear_velocity(i) += options_.velocity_noise * ud(rng_);
  }
  ++index_;
  return t;
}

}  // namespace quadqp::gait
