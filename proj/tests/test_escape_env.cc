#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "escape/errors.h"
#include "escape/escape_env.h"
#include "escape/scenario.h"

namespace escape {
namespace {

constexpr double kPi = std::numbers::pi;

const EnvSetup& SharedSetup() {
  static const EnvSetup setup = EnvSetup::Default();
  return setup;
}

Scenario Room(Pose2 start, Pose2 goal, double size = 4.0) {
  Scenario s;
  s.obstacles.bounds = Box{0, 0, size, size};
  s.start = start;
  s.goal = goal;
  s.witness_path = {start, goal};
  return s;
}

Scenario Doorway(double half_opening) {
  Scenario s = Room({0.7, 1.5, 0}, {2.3, 1.5, 0}, 3.0);
  const double lo = 1.5 - half_opening, hi = 1.5 + half_opening;
  s.obstacles.polygons.push_back(Polygon({{1.4, 0}, {1.6, 0}, {1.6, lo}, {1.4, lo}}));
  s.obstacles.polygons.push_back(Polygon({{1.4, hi}, {1.6, hi}, {1.6, 3}, {1.4, 3}}));
  return s;
}

void ExpectTarget(const TargetFeatures& t, double d, double cb, double sb,
                  double ch, double sh) {
  EXPECT_NEAR(t.distance, d, 1e-12);
  EXPECT_NEAR(t.cos_bearing, cb, 1e-12);
  EXPECT_NEAR(t.sin_bearing, sb, 1e-12);
  EXPECT_NEAR(t.cos_heading, ch, 1e-12);
  EXPECT_NEAR(t.sin_heading, sh, 1e-12);
}

TEST(ComputeTargetTest, Examples) {
  ExpectTarget(ComputeTarget({0, 0, 0}, {1, 0, 0}), 1, 1, 0, 1, 0);
  ExpectTarget(ComputeTarget({0, 0, 0}, {-2, 0, 0}), 2, -1, 0, 1, 0);
  ExpectTarget(ComputeTarget({1, 1, 0}, {1, 1, kPi / 2}), 0, 1, 0, 0, 1);
  ExpectTarget(ComputeTarget({0, 0, kPi / 2}, {0, 1, kPi / 2}), 1, 1, 0, 1, 0);
}

TEST(ComputeTargetTest, UnitPairs) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 500; ++i) {
    const TargetFeatures t = ComputeTarget({u(rng), u(rng), u(rng)}, {u(rng), u(rng), u(rng)});
    EXPECT_NEAR(t.cos_bearing * t.cos_bearing + t.sin_bearing * t.sin_bearing, 1, 1e-12);
    EXPECT_NEAR(t.cos_heading * t.cos_heading + t.sin_heading * t.sin_heading, 1, 1e-12);
  }
}

TEST(ComputeRewardTest, Examples) {
  const Footprint fp;
  const MotionLimits lim;
  const EpisodeConfig cfg;
  const Pose2 goal{2, 0, 0};
  const RewardBreakdown at_goal = ComputeReward(fp, lim, {1.9, 0, 0}, goal, goal, cfg);
  EXPECT_DOUBLE_EQ(at_goal.iou_term, 1.0);
  const RewardBreakdown still = ComputeReward(fp, lim, {0, 0, 0}, {0, 0, 0}, goal, cfg);
  EXPECT_EQ(still.distance_term, 0.0);
  EXPECT_EQ(still.iou_term, 0.0);
  const Pose2 moved = IntegrateArc({0, 0, 0}, {0, lim.v_max}, lim.dt);
  const RewardBreakdown toward = ComputeReward(fp, lim, {0, 0, 0}, moved, goal, cfg);
  EXPECT_NEAR(toward.distance_term, 1.0, 1e-12);
  EXPECT_NEAR(toward.time_term, -std::tanh(0.5), 1e-15);
  EXPECT_NEAR(toward.total, 0.5 * 1.0 + 0.1 * -std::tanh(0.5), 1e-12);
  const RewardBreakdown away = ComputeReward(fp, lim, moved, {0, 0, 0}, goal, cfg);
  EXPECT_NEAR(away.distance_term, -1.0, 1e-12);
}

TEST(ComputeRewardTest, Bounded) {
  const Footprint fp;
  const MotionLimits lim;
  const EpisodeConfig cfg;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 500; ++i) {
    const Pose2 a{u(rng), u(rng), 3 * u(rng)}, goal{u(rng), u(rng), 3 * u(rng)};
    const Pose2 b = IntegrateArc(a, {u(rng), 0.3 * u(rng)}, lim.dt);
    const RewardBreakdown r = ComputeReward(fp, lim, a, b, goal, cfg);
    EXPECT_GE(r.iou_term, 0.0);
    EXPECT_LE(r.iou_term, 1.0);
    EXPECT_GE(r.distance_term, -1.0);
    EXPECT_LE(r.distance_term, 1.0);
    EXPECT_LE(std::abs(r.total), 1.0 + 0.5 + 0.1);
  }
}

TEST(EpisodeConfigTest, Validation) {
  EpisodeConfig c;
  EXPECT_NO_THROW(c.Validate());
  c.max_steps = 0;
  EXPECT_THROW(c.Validate(), InvalidArgument);
  c = {};
  c.success_iou = 1.5;
  EXPECT_THROW(c.Validate(), InvalidArgument);
}

TEST(EscapeEnvTest, ResetFixedGoal) {
  EscapeEnv env(SharedSetup());
  const Scenario s = Generate(ConfigForClass(GeneratorConfig{}, ScenarioClass::kN), 3);
  const Observation o = env.Reset(s, {}, 1);
  EXPECT_EQ(env.goal(), s.goal);
  EXPECT_EQ(env.start(), s.start);
  EXPECT_EQ(env.pose(), s.start);
  EXPECT_EQ(o.scan.size(), 500u);
  EXPECT_EQ(o.target, ComputeTarget(s.start, s.goal));
  EXPECT_EQ(o.mask, ComputeMask(SimulateScan(s.start, s.obstacles, SharedSetup().lidar), *SharedSetup().table));
}

TEST(EscapeEnvTest, ResetRandomizedIsSeeded) {
  const Scenario s = Generate(ConfigForClass(GeneratorConfig{}, ScenarioClass::kNCSL), 3);
  EpisodeConfig cfg;
  cfg.stage = CurriculumStage::kRandomizedGoal;
  EscapeEnv a(SharedSetup()), b(SharedSetup());
  a.Reset(s, cfg, 42);
  b.Reset(s, cfg, 42);
  EXPECT_EQ(a.start(), b.start());
  EXPECT_EQ(a.goal(), b.goal());
  bool differs = false;
  for (std::uint64_t seed = 43; seed < 53; ++seed) {
    b.Reset(s, cfg, seed);
    differs |= !(a.start() == b.start() && a.goal() == b.goal());
    EXPECT_FALSE(Collides(SharedSetup().footprint, b.start(), s.obstacles));
  }
  EXPECT_TRUE(differs);
}

TEST(EscapeEnvTest, CorruptStartIsRejected) {
  Scenario s = Room({1, 1, 0}, {3, 3, 0});
  s.obstacles.polygons.push_back(Polygon::Rectangle({1, 1}, 0.2, 0.2));
  EscapeEnv env(SharedSetup());
  EXPECT_THROW(env.Reset(s, {}, 1), InvalidPose);
}

TEST(EscapeEnvTest, NullStepAtGoalSucceeds) {
  EscapeEnv env(SharedSetup());
  env.Reset(Room({2, 2, 0.1}, {2, 2, 0.1}), {}, 1);
  const StepResult r = env.Step({0, 0});
  EXPECT_TRUE(r.terminal);
  EXPECT_EQ(r.cause, TerminalCause::kSuccess);
  EXPECT_THROW(env.Step({0, 0}), StateError);
}

TEST(EscapeEnvTest, SuccessFollowsIouThreshold) {
  const Footprint fp;
  for (double off : {0.02, 0.05, 0.06, 0.1}) {
    EscapeEnv env(SharedSetup());
    const Pose2 goal{2 + off, 2, 0};
    env.Reset(Room({2, 2, 0}, goal), {}, 1);
    const StepResult r = env.Step({0, 0});
    const double iou = Iou(FootprintAt(fp, {2, 2, 0}), FootprintAt(fp, goal));
    EXPECT_EQ(r.cause == TerminalCause::kSuccess, iou >= 0.8) << off;
    EXPECT_NEAR(r.reward.iou_term, iou, 1e-12);
  }
}

TEST(EscapeEnvTest, DrivingIntoWallCollides) {
  EscapeEnv env(SharedSetup());
  const Scenario s = Room({3.8, 2, 0}, {1, 1, 0});
  env.Reset(s, {}, 1);
  StepResult r;
  for (int i = 0; i < 5 && !r.terminal; ++i) r = env.Step({0, 0.3});
  EXPECT_TRUE(r.terminal);
  EXPECT_EQ(r.cause, TerminalCause::kCollision);
  EXPECT_TRUE(Collides(SharedSetup().footprint, r.pose, s.obstacles));
  EXPECT_FALSE(env.active());
  EXPECT_THROW(env.Step({0, 0}), StateError);
}

TEST(EscapeEnvTest, TimeoutAccumulatesTimePenalty) {
  EscapeEnv env(SharedSetup());
  EpisodeConfig cfg;
  cfg.max_steps = 25;
  env.Reset(Room({1, 1, 0}, {3, 3, 0}), cfg, 1);
  double time_sum = 0.0, total = 0.0;
  StepResult r;
  int steps = 0;
  while (!r.terminal) {
    r = env.Step({0, 0});
    time_sum += r.reward.time_term;
    total += r.reward.total;
    ++steps;
  }
  EXPECT_EQ(steps, 25);
  EXPECT_EQ(r.cause, TerminalCause::kTimeout);
  EXPECT_NEAR(time_sum, -25 * std::tanh(0.5), 1e-12);
  EXPECT_NEAR(total, 0.1 * time_sum, 1e-12);
}

TEST(EscapeEnvTest, ErrorsBeforeResetAndOutOfLimits) {
  EscapeEnv env(SharedSetup());
  EXPECT_THROW(env.Step({0, 0}), StateError);
  env.Reset(Room({1, 1, 0}, {3, 3, 0}), {}, 1);
  EXPECT_THROW(env.Step({0, 0.5}), RangeError);
  EXPECT_THROW(env.StepAction(42), RangeError);
  EXPECT_THROW(env.StepAction(-1), RangeError);
  const StepResult r = env.StepAction(0);
  EXPECT_EQ(r.command, (VelocityCommand{1.0, 0.0}));
  EXPECT_EQ(r.step, 1);
}

Pose2 Transform(const Pose2& p, double phi, Vec2 t) {
  return {std::cos(phi) * p.x - std::sin(phi) * p.y + t.x,
          std::sin(phi) * p.x + std::cos(phi) * p.y + t.y, p.theta + phi};
}

TEST(EscapeEnvTest, ObservationIsFrameInvariant) {
  const Scenario base = Generate(ConfigForClass(GeneratorConfig{}, ScenarioClass::kNC), 8);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ang(-kPi, kPi), off(-3, 3);
  for (int trial = 0; trial < 5; ++trial) {
    const double phi = ang(rng);
    const Vec2 t{off(rng), off(rng)};
    Scenario a = base, b = base;
    a.obstacles.bounds.reset();
    b.obstacles.bounds.reset();
    b.obstacles.polygons.clear();
    for (const Polygon& p : base.obstacles.polygons) {
      std::vector<Vec2> v;
      for (const Vec2& q : p.vertices()) {
        const Pose2 m = Transform({q.x, q.y, 0}, phi, t);
        v.push_back({m.x, m.y});
      }
      b.obstacles.polygons.push_back(Polygon(v));
    }
    b.start = Transform(base.start, phi, t);
    b.goal = Transform(base.goal, phi, t);
    for (Pose2& p : b.witness_path) p = Transform(p, phi, t);
    EscapeEnv ea(SharedSetup()), eb(SharedSetup());
    const Observation oa = ea.Reset(a, {}, 1);
    const Observation ob = eb.Reset(b, {}, 1);
    for (std::size_t j = 0; j < oa.scan.size(); ++j) {
      EXPECT_NEAR(oa.scan[j], ob.scan[j], 1e-9);
    }
    EXPECT_NEAR(oa.target.distance, ob.target.distance, 1e-9);
    EXPECT_NEAR(oa.target.cos_bearing, ob.target.cos_bearing, 1e-9);
    EXPECT_NEAR(oa.target.sin_bearing, ob.target.sin_bearing, 1e-9);
    EXPECT_NEAR(oa.target.cos_heading, ob.target.cos_heading, 1e-9);
    EXPECT_NEAR(oa.target.sin_heading, ob.target.sin_heading, 1e-9);
    EXPECT_EQ(oa.mask, ob.mask);
  }
}

TEST(EscapeEnvTest, MaskValidActionsNeverCollide) {
  std::mt19937_64 rng(5);
  int steps = 0;
  for (int ep = 0; ep < 20; ++ep) {
    const Scenario s = Generate(ConfigForClass(GeneratorConfig{}, ClassForIndex(ep, 20)), 700 + ep);
    EscapeEnv env(SharedSetup());
    EpisodeConfig cfg;
    cfg.max_steps = 100;
    Observation o = env.Reset(s, cfg, ep);
    while (true) {
      std::vector<int> valid;
      for (int a = 0; a < 42; ++a) if (o.mask.valid[a]) valid.push_back(a);
      if (valid.empty()) break;
      const int a = valid[std::uniform_int_distribution<std::size_t>(0, valid.size() - 1)(rng)];
      const StepResult r = env.StepAction(a);
      ++steps;
      ASSERT_NE(r.cause, TerminalCause::kCollision) << ep << " action " << a;
      if (r.terminal) break;
      o = r.observation;
    }
  }
  EXPECT_GT(steps, 500);
}

TEST(HybridActionTest, OpenRoomUsesGuidance) {
  EscapeEnv env(SharedSetup());
  EpisodeConfig cfg;
  cfg.hybrid_guidance = true;
  cfg.max_steps = 200;
  env.Reset(Room({1, 1, 0}, {3, 2.5, 1.0}), cfg, 1);
  StepResult r;
  int steps = 0;
  while (!r.terminal) {
    const auto [cmd, source] = env.HybridAction({0, 0});
    EXPECT_EQ(source, ActionSource::kGuidance) << steps;
    r = env.Step(cmd, source);
    EXPECT_EQ(r.source, source);
    ++steps;
  }
  EXPECT_EQ(r.cause, TerminalCause::kSuccess);
}

TEST(HybridActionTest, NarrowExitFallsBackToPolicy) {
  EscapeEnv env(SharedSetup());
  EpisodeConfig cfg;
  cfg.hybrid_guidance = true;
  env.Reset(Doorway(0.20), cfg, 1);
  const VelocityCommand mine{0.5, -0.1};
  const auto [cmd, source] = env.HybridAction(mine);
  EXPECT_EQ(source, ActionSource::kPolicy);
  EXPECT_EQ(cmd, mine);
}

TEST(HybridActionTest, UnavailableInEvaluation) {
  EscapeEnv env(SharedSetup());
  env.Reset(Room({1, 1, 0}, {3, 3, 0}), {}, 1);
  EXPECT_THROW(env.HybridAction({0, 0}), StateError);
}

TEST(Names, RoundTrip) {
  for (TerminalCause c : {TerminalCause::kNone, TerminalCause::kSuccess,
                          TerminalCause::kCollision, TerminalCause::kTimeout}) {
    EXPECT_EQ(ParseCause(CauseName(c)), c);
  }
  EXPECT_EQ(ParseSource(SourceName(ActionSource::kGuidance)), ActionSource::kGuidance);
  EXPECT_FALSE(ParseCause("crash").has_value());
}

}  // namespace
}  // namespace escape
