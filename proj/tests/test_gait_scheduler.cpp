#include "quadqp/gait_scheduler.hpp"

#include <gtest/gtest.h>

using namespace quadqp;
using namespace quadqp::gait;

namespace {

CommandProfile constant_profile(const Command& c, double duration = 5.0) {
  CommandProfile p;
  p.name = "const";
  p.times = {0.0};
  p.segments = {c};
  p.duration = duration;
  return p;
}

srbd::SrbdState hover_state() {
  srbd::SrbdState s;
  s.position = Vec3(0.0, 0.0, 0.3);
  return s;
}

}  // namespace

TEST(ContactFlags, StandIsAllStance) {
  GaitParams p;
  p.gait = GaitType::kStand;
  for (double ph : {0.0, 0.37, 0.99}) {
    for (const auto& f : contact_flags(p, ph)) EXPECT_EQ(f, (mpc::ContactFlags{true, true, true, true}));
  }
}

TEST(ContactFlags, TrotPairsAlternate) {
  GaitParams p;
  const auto f = contact_flags(p, 0.0);
  EXPECT_EQ(f[0], (mpc::ContactFlags{true, false, false, true}));
  for (const auto& s : f) {
    EXPECT_EQ(s[kFL], s[kRR]);
    EXPECT_EQ(s[kFR], s[kRL]);
    EXPECT_NE(s[kFL], s[kFR]);
  }
}

TEST(ContactFlags, DutyCycleOverOneCycle) {
  for (double duty : {0.5, 0.6, 0.7}) {
    GaitParams p;
    p.stance_duration = 0.4 * duty;
    p.swing_duration = 0.4 * (1.0 - duty);
    p.horizon = 20;  // one cycle
    const auto f = contact_flags(p, 0.35);
    for (int j = 0; j < 4; ++j) {
      int n = 0;
      for (const auto& s : f) n += s[j] ? 1 : 0;
      EXPECT_NEAR(n, duty * 20, 1.0) << "duty " << duty;
    }
    for (const auto& s : f) {
      int n = 0;
      for (bool b : s) n += b ? 1 : 0;
      EXPECT_TRUE(n == 2 || n == 4);
    }
  }
}

TEST(ContactFlags, RejectsBadPhase) {
  EXPECT_THROW(contact_flags(GaitParams{}, 1.0), InputError);
  GaitParams p;
  p.swing_duration = 0.0;
  EXPECT_THROW(contact_flags(p, 0.0), ParameterError);
}

TEST(ReferenceStates, ZeroCommandHovers) {
  const auto s = hover_state();
  for (const auto& t : reference_states(s, constant_profile({}), 0.0, 10, 0.02)) {
    EXPECT_EQ(t.to_vector(), s.to_vector());
  }
}

TEST(ReferenceStates, IntegratesVelocityAndYaw) {
  const auto s = hover_state();
  const auto r = reference_states(s, constant_profile({0.5, 0, 0, 0, 0, 0}), 0.0, 10, 0.02);
  EXPECT_NEAR(r[9].position.x(), 0.1, 1e-12);
  EXPECT_NEAR(r[9].linear_velocity.x(), 0.5, 1e-15);

  const double w = 40.0 * M_PI / 180.0;
  const auto y = reference_states(s, constant_profile({0, 0, w, 0, 0, 0}), 0.0, 50, 0.02);
  EXPECT_NEAR(y.back().yaw(), w, 1e-12);
  EXPECT_NEAR(y.back().angular_velocity.z(), w, 1e-15);
}

TEST(ReferenceStates, ShiftConsistent) {
  const auto prof = scenario("trotting", 3);
  auto s = hover_state();
  for (double t0 : {3.0, 11.0, 17.5}) {
    const auto a = reference_states(s, prof, t0, 10, 0.02);
    const auto b = reference_states(a[0], prof, t0 + 0.02, 10, 0.02);
    for (int k = 0; k + 1 < 10; ++k) EXPECT_LT((b[k].to_vector() - a[k + 1].to_vector()).norm(), 1e-12);
  }
}

TEST(Footholds, UnderHipsAtRest) {
  const auto s = hover_state();
  GaitParams p;
  const auto flags = contact_flags(p, 0.0);
  const auto targets = reference_states(s, constant_profile({}), 0.0, 10, 0.02);
  const auto hips = hips_on_ground(s, Geometry{});
  const auto f = foothold_positions(s, flags, targets, p, Geometry{}, hips, {true, true, true, true});
  for (const auto& stage : f)
    for (int j = 0; j < 4; ++j) EXPECT_LT((stage[j] - hips[j]).norm(), 1e-15);
}

TEST(Footholds, ForwardCommandShiftsTouchdown) {
  auto s = hover_state();
  s.linear_velocity.x() = 0.4;
  GaitParams p;
  const auto flags = contact_flags(p, 0.5);  // pair A swings at stage 0
  ASSERT_FALSE(flags[0][kFL]);
  const auto targets = reference_states(s, constant_profile({0.4, 0, 0, 0, 0, 0}), 0.0, 10, 0.02);
  const auto f = foothold_positions(s, flags, targets, p, Geometry{}, hips_on_ground(s, Geometry{}),
                                    {true, false, false, true});
  // pair B touches down at stage 0
  const auto hips = hips_on_ground(s, Geometry{});
  EXPECT_NEAR(f[0][kFR].x() - hips[kFR].x(), 0.5 * 0.4 * p.stance_duration, 1e-12);
  EXPECT_NEAR(f[0][kFR].y() - hips[kFR].y(), 0.0, 1e-15);
  EXPECT_EQ(f[5][kFR], f[0][kFR]);
}

TEST(Footholds, ContinuousWithinStance) {
  ScenarioStream stream(scenario("trotting"), scenario_gait("trotting", 10));
  for (int i = 0; i < 600; ++i) {
    const auto t = stream.next();
    for (int k = 1; k < 10; ++k)
      for (int j = 0; j < 4; ++j)
        if (t.gait.contacts[k][j] && t.gait.contacts[k - 1][j]) EXPECT_EQ(t.gait.feet[k][j], t.gait.feet[k - 1][j]);
  }
}

TEST(Scenario, ProfileLimits) {
  const auto trot = scenario("trotting");
  const auto stand = scenario("standing");
  EXPECT_NEAR(trot.duration, 40.0, 1e-12);
  EXPECT_NEAR(stand.duration, 20.0, 1e-12);
  double vmax = 0, wmax = 0, roll = 0, pitch = 0, hmax = 0;
  for (const auto& c : trot.segments) {
    vmax = std::max(vmax, std::hypot(c.vx, c.vy));
    wmax = std::max(wmax, std::abs(c.yaw_rate));
  }
  for (const auto& c : stand.segments) {
    roll = std::max(roll, std::abs(c.roll));
    pitch = std::max(pitch, std::abs(c.pitch));
    hmax = std::max(hmax, std::abs(c.height_offset));
  }
  EXPECT_NEAR(vmax, 0.5, 1e-12);
  EXPECT_NEAR(wmax, 40.0 * M_PI / 180.0, 1e-12);
  EXPECT_NEAR(roll, 30.0 * M_PI / 180.0, 1e-12);
  EXPECT_NEAR(pitch, 30.0 * M_PI / 180.0, 1e-12);
  EXPECT_NEAR(hmax, 0.1, 1e-12);
  for (const auto& p : {trot, stand, scenario("trotting", 9), scenario("standing", 9)}) {
    EXPECT_EQ(p.segments.front(), Command{});
    EXPECT_EQ(p.segments.back(), Command{});
  }
  EXPECT_THROW(scenario("galloping"), InputError);
}

TEST(Scenario, StandingYawSweepReachesThirtyDegrees) {
  ScenarioStream stream(scenario("standing", 4), scenario_gait("standing", 10));
  double ymax = 0, ymin = 0;
  srbd::SrbdState last;
  while (!stream.done()) {
    last = stream.next().current;
    ymax = std::max(ymax, last.yaw());
    ymin = std::min(ymin, last.yaw());
  }
  EXPECT_NEAR(ymax, 30.0 * M_PI / 180.0, 1e-9);
  EXPECT_NEAR(ymin, -30.0 * M_PI / 180.0, 1e-9);
  EXPECT_NEAR(last.yaw(), 0.0, 1e-9);
}

TEST(Scenario, JsonRoundTrip) {
  const auto p = scenario("standing", 2);
  const auto r = parse_profile(profile_to_json(p));
  EXPECT_EQ(r.times, p.times);
  EXPECT_EQ(r.segments, p.segments);
  EXPECT_EQ(r.duration, p.duration);
  EXPECT_THROW(parse_profile(R"({"name":"x","duration":1,"segments":[{"t":0.5}]})"), InputError);
  EXPECT_THROW(parse_profile(R"({"name":"x","duration":1,"segments":[{"t":0,"vx":3}]})"), InputError);
}

TEST(ScenarioStream, SequencesAreValidAndTrotKeepsTwoLegs) {
  for (int N : {10, 20}) {
    ScenarioStream stream(scenario("trotting"), scenario_gait("trotting", N));
    EXPECT_EQ(stream.num_ticks(), 2000);
    while (!stream.done()) {
      const auto t = stream.next();
      EXPECT_NO_THROW(t.gait.validate());
      for (const auto& s : t.gait.contacts) {
        int n = 0;
        for (bool b : s) n += b ? 1 : 0;
        ASSERT_GE(n, 2);
      }
    }
  }
}

TEST(ScenarioStream, SeededNoiseIsDeterministic) {
  StreamOptions o;
  o.position_noise = 0.01;
  o.seed = 5;
  ScenarioStream a(scenario("standing"), scenario_gait("standing", 10), {}, o);
  ScenarioStream b(scenario("standing"), scenario_gait("standing", 10), {}, o);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(a.next().current.to_vector(), b.next().current.to_vector());
}
