#pragma once

#include "quadqp/mpc_qp.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace quadqp::gait {

/// Leg order used everywhere: front-left, front-right, rear-left, rear-right.
enum Leg { kFL = 0, kFR = 1, kRL = 2, kRR = 3 };

enum class GaitType { kStand, kTrot };

std::string to_string(GaitType g);
GaitType gait_from_string(const std::string& s);

struct GaitParams {
  GaitType gait = GaitType::kTrot;
  double stance_duration = 0.2;
  double swing_duration = 0.2;
  /// Trot pairs {FL,RR} and {FR,RL} half a cycle apart.
  std::array<double, 4> phase_offsets = {0.0, 0.5, 0.5, 0.0};
  double dt = 0.02;
  int horizon = 10;

  [[nodiscard]] double cycle() const { return stance_duration + swing_duration; }
  [[nodiscard]] double duty() const { return stance_duration / cycle(); }
  void validate() const;
};

/// Per-stage contact plan over the horizon starting at gait phase `phase`.
/// Phases are quantized to whole stages of the cycle.
std::vector<mpc::ContactFlags> contact_flags(const GaitParams& params, double phase);

/// Command held between two profile time stamps. Velocities are body-frame
/// (heading-aligned); roll and pitch are absolute targets.
struct Command {
  double vx = 0.0;
  double vy = 0.0;
  double yaw_rate = 0.0;
  double height_offset = 0.0;
  double roll = 0.0;
  double pitch = 0.0;

  bool operator==(const Command&) const = default;
};

struct CommandLimits {
  double speed = 0.5;
  double yaw_rate = 40.0 * M_PI / 180.0;
  double height_offset = 0.10;
  double tilt = 30.0 * M_PI / 180.0;
};

/// Piecewise-constant command profile. segments[i] starts at times[i].
struct CommandProfile {
  std::string name;
  std::vector<double> times;
  std::vector<Command> segments;
  double duration = 0.0;
  double nominal_height = 0.3;

  [[nodiscard]] const Command& at(double t) const;
  /// Throws InputError on non-increasing stamps or out-of-limit commands.
  void validate(const CommandLimits& limits = {}) const;
};

/// "trotting" (40 s) or "standing" (20 s). A non-zero seed shuffles the order
/// of the sweep segments; amplitudes and the zero-command ends are kept.
CommandProfile scenario(const std::string& name, std::uint64_t seed = 0);

CommandProfile parse_profile(const std::string& json_text);
std::string profile_to_json(const CommandProfile& profile);

/// Targets for x_1..x_N: position and yaw integrate the command along the
/// horizon, velocities equal the command, height and tilt are set directly.
std::vector<srbd::SrbdState> reference_states(const srbd::SrbdState& current, const CommandProfile& profile,
                                              double t0, int N, double dt);

struct Geometry {
  std::array<Vec3, 4> hip_offsets = {Vec3(0.19, 0.11, 0.0), Vec3(0.19, -0.11, 0.0), Vec3(-0.19, 0.11, 0.0),
                                     Vec3(-0.19, -0.11, 0.0)};
};

/// Hip positions of `state` projected to the ground plane z = 0.
srbd::FootPositions hips_on_ground(const srbd::SrbdState& state, const Geometry& geometry);

/// Per-stage foot positions. A stance foot keeps its touchdown point; a foot
/// touching down lands under its hip shifted by ½·v·stance_duration. Swing
/// feet report their next touchdown point.
std::vector<srbd::FootPositions> foothold_positions(const srbd::SrbdState& current,
                                                    const std::vector<mpc::ContactFlags>& flags,
                                                    const std::vector<srbd::SrbdState>& targets,
                                                    const GaitParams& params, const Geometry& geometry,
                                                    const srbd::FootPositions& current_feet,
                                                    const mpc::ContactFlags& previous_flags);

struct Tick {
  int index = 0;
  double time = 0.0;
  srbd::SrbdState current;
  mpc::GaitSequence gait;
};

struct StreamOptions {
  /// Uniform perturbation half-widths applied to the open-loop state.
  double position_noise = 0.0;
  double velocity_noise = 0.0;
  std::uint64_t seed = 0;
};

/// Open-loop tick generator: the state at tick i+1 is the first target of
/// tick i, optionally perturbed.
class ScenarioStream {
 public:
  ScenarioStream(CommandProfile profile, GaitParams params, Geometry geometry = {}, StreamOptions options = {});

  [[nodiscard]] int num_ticks() const { return num_ticks_; }
  [[nodiscard]] bool done() const { return index_ >= num_ticks_; }
  Tick next();

 private:
  CommandProfile profile_;
  GaitParams params_;
  Geometry geometry_;
  StreamOptions options_;
  std::mt19937_64 rng_;
  int num_ticks_ = 0;
  int index_ = 0;
  srbd::SrbdState state_;
  srbd::FootPositions feet_;
  mpc::ContactFlags last_flags_{};
};

/// Gait parameters matching a scenario name (standing → stand gait).
GaitParams scenario_gait(const std::string& name, int horizon);

}  // namespace quadqp::gait
