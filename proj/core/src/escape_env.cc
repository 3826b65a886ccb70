#include "escape/escape_env.h"

#include <algorithm>
#include <cmath>

#include "escape/errors.h"
#include "escape/trace.h"

namespace escape {
namespace {

std::uint64_t Mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::string_view CauseName(TerminalCause cause) {
  switch (cause) {
    case TerminalCause::kNone:
      return "none";
    case TerminalCause::kSuccess:
      return "success";
    case TerminalCause::kCollision:
      return "collision";
    case TerminalCause::kTimeout:
      return "timeout";
  }
  return "none";
}

std::optional<TerminalCause> ParseCause(std::string_view name) {
  for (TerminalCause c : {TerminalCause::kNone, TerminalCause::kSuccess,
                          TerminalCause::kCollision, TerminalCause::kTimeout}) {
    if (CauseName(c) == name) return c;
  }
  return std::nullopt;
}

std::string_view SourceName(ActionSource source) {
  return source == ActionSource::kGuidance ? "guidance" : "policy";
}

std::optional<ActionSource> ParseSource(std::string_view name) {
  if (name == "guidance") return ActionSource::kGuidance;
  if (name == "policy") return ActionSource::kPolicy;
  return std::nullopt;
}

void EpisodeConfig::Validate() const {
  if (max_steps <= 0) throw InvalidArgument("max_steps must be positive");
  if (!(success_iou > 0.0 && success_iou <= 1.0)) {
    throw InvalidArgument("success IOU threshold must lie in (0, 1]");
  }
  if (!(collision_ds > 0.0)) throw InvalidArgument("collision_ds must be positive");
  if (reset_retries <= 0) throw InvalidArgument("reset_retries must be positive");
}

TargetFeatures ComputeTarget(const Pose2& pose, const Pose2& goal) {
  TargetFeatures t;
  const double dx = goal.x - pose.x;
  const double dy = goal.y - pose.y;
  t.distance = std::hypot(dx, dy);
  if (t.distance >= 1e-6) {
    const double bearing = std::atan2(dy, dx) - pose.theta;
    t.cos_bearing = std::cos(bearing);
    t.sin_bearing = std::sin(bearing);
  }
  const double phi = goal.theta - pose.theta;
  t.cos_heading = std::cos(phi);
  t.sin_heading = std::sin(phi);
  return t;
}

RewardBreakdown ComputeReward(const Footprint& fp, const MotionLimits& limits,
                              const Pose2& prev, const Pose2& next,
                              const Pose2& goal, const EpisodeConfig& config) {
  RewardBreakdown r;
  r.iou_term = Iou(FootprintAt(fp, next), FootprintAt(fp, goal));
  const double d_prev = std::hypot(goal.x - prev.x, goal.y - prev.y);
  const double d_next = std::hypot(goal.x - next.x, goal.y - next.y);
  r.distance_term =
      std::clamp((d_prev - d_next) / (limits.v_max * limits.dt), -1.0, 1.0);
  r.time_term = -std::tanh(config.time_constant);
  r.total = config.weights.iou * r.iou_term +
            config.weights.distance * r.distance_term +
            config.weights.time * r.time_term;
  return r;
}

EnvSetup EnvSetup::Default() {
  EnvSetup setup;
  setup.table = std::make_shared<const BoundaryTable>(PrecomputeBoundaryTable(
      setup.footprint, BuildActionSpace(setup.limits), setup.lidar,
      setup.limits.dt, setup.mask));
  return setup;
}

EscapeEnv::EscapeEnv(EnvSetup setup)
    : setup_(std::move(setup)), actions_(BuildActionSpace(setup_.limits)) {
  if (!setup_.lidar.Valid()) throw InvalidArgument("invalid lidar spec");
  if (!setup_.table) {
    setup_.table = std::make_shared<const BoundaryTable>(PrecomputeBoundaryTable(
        setup_.footprint, actions_, setup_.lidar, setup_.limits.dt,
        setup_.mask));
  }
  if (setup_.table->ray_count() != setup_.lidar.ray_count ||
      setup_.table->action_count() != kActionCount) {
    throw InvalidArgument("boundary table does not match the lidar and actions");
  }
}

Observation EscapeEnv::Reset(const Scenario& scenario,
                             const EpisodeConfig& config, std::uint64_t seed) {
  config.Validate();
  scenario_ = scenario;
  config_ = config;
  active_ = false;
  steps_ = 0;
  plan_.reset();
  predicted_.reset();

  if (config.stage == CurriculumStage::kFixedGoalNearEntrance) {
    start_ = scenario.start;
    goal_ = scenario.goal;
    if (Collides(setup_.footprint, start_, scenario.obstacles)) {
      throw InvalidPose("scenario start pose is in collision");
    }
  } else {
    const std::vector<Pose2>& path = scenario.witness_path;
    if (path.size() < 2) {
      throw InvalidPose("randomized goals need a witness path");
    }
    std::mt19937_64 rng(Mix(seed));
    bool found = false;
    for (int i = 0; i < config.reset_retries && !found; ++i) {
      const std::size_t a =
          std::uniform_int_distribution<std::size_t>(0, path.size() - 2)(rng);
      const std::size_t b =
          std::uniform_int_distribution<std::size_t>(a + 1, path.size() - 1)(rng);
      if (Collides(setup_.footprint, path[a], scenario.obstacles) ||
          Collides(setup_.footprint, path[b], scenario.obstacles)) {
        continue;
      }
      start_ = path[a];
      goal_ = path[b];
      found = true;
    }
    if (!found) throw InvalidPose("no collision-free start found");
  }
  pose_ = start_;
  goal_body_ = FootprintAt(setup_.footprint, goal_);
  active_ = true;
  if (config.hybrid_guidance) {
    const Vec2 extra[] = {{start_.x, start_.y}, {goal_.x, goal_.y}};
    planner_ = std::make_unique<GuidancePlanner>(scenario.obstacles,
                                                 setup_.planner, extra);
  } else {
    planner_.reset();
  }
  if (trace_) {
    trace_->WriteHeader({scenario_, setup_.footprint, setup_.limits, start_,
                         goal_, seed, {}});
  }
  return config.observe ? Observe() : Observation{};
}

Observation EscapeEnv::Observe() const {
  Observation obs;
  obs.target = ComputeTarget(pose_, goal_);
  try {
    ScanFrame scan = SimulateScan(pose_, scenario_.obstacles, setup_.lidar);
    obs.mask = ComputeMask(scan, *setup_.table);
    obs.scan = std::move(scan.ranges);
  } catch (const InvalidPose&) {
    // Sensor origin in contact (only after a collision): blind and stuck.
    obs.scan.assign(setup_.lidar.ray_count, 0.0);
  }
  return obs;
}

StepResult EscapeEnv::Step(const VelocityCommand& cmd, ActionSource source) {
  if (!active_) throw StateError("step on an inactive episode");
  if (!setup_.limits.Admits(cmd, 1e-9)) {
    throw RangeError("command outside the motion limits");
  }
  const MotionLimits& limits = setup_.limits;
  const Pose2 prev = pose_;
  StepResult result;
  result.command = cmd;
  result.source = source;

  const std::optional<std::size_t> hit =
      FirstSweptCollision(setup_.footprint, prev, cmd, limits.dt,
                          scenario_.obstacles, config_.collision_ds);
  if (hit) {
    const auto samples = SweepSamples(setup_.footprint, cmd, limits.dt,
                                      config_.collision_ds, true);
    pose_ = Compose(prev, samples[*hit].pose);
  } else {
    pose_ = IntegrateArc(prev, cmd, limits.dt);
  }
  ++steps_;

  result.reward =
      ComputeReward(setup_.footprint, limits, prev, pose_, goal_, config_);
  if (hit) {
    result.cause = TerminalCause::kCollision;
  } else if (result.reward.iou_term >= config_.success_iou) {
    result.cause = TerminalCause::kSuccess;
  } else if (steps_ >= config_.max_steps) {
    result.cause = TerminalCause::kTimeout;
  }
  result.terminal = result.cause != TerminalCause::kNone;
  result.pose = pose_;
  result.step = steps_;
  if (result.terminal) active_ = false;
  if (config_.observe) result.observation = Observe();

  if (trace_) {
    trace_->WriteStep({steps_, pose_, cmd, result.reward,
                       config_.observe ? result.observation.mask.ToBitString()
                                       : std::string(),
                       source, result.terminal, result.cause});
  }
  return result;
}

StepResult EscapeEnv::StepAction(int index) {
  if (index < 0 || static_cast<std::size_t>(index) >= kActionCount) {
    throw RangeError("action index " + std::to_string(index) +
                     " outside [0, 42)");
  }
  return Step(actions_[index].command);
}

std::pair<VelocityCommand, ActionSource> EscapeEnv::HybridAction(
    const VelocityCommand& policy_action) {
  if (!config_.hybrid_guidance || !planner_) {
    throw StateError("hybrid guidance is only available in training mode");
  }
  if (!active_) throw StateError("hybrid action on an inactive episode");
  const double tol = setup_.planner.resolution;
  const bool deviated =
      !predicted_ ||
      std::hypot(pose_.x - predicted_->x, pose_.y - predicted_->y) > tol ||
      std::abs(NormalizeAngle(pose_.theta - predicted_->theta)) > tol;
  if (!plan_ || deviated) {
    plan_.reset();
    GuidancePlan g = planner_->Plan(pose_, goal_,
                                    setup_.footprint.CircumscribedRadius());
    if (g.found()) plan_ = std::move(g.rtr);
  }
  if (plan_) {
    AdvancePlan(*plan_, pose_);
    if (!plan_->Exhausted()) {
      const VelocityCommand cmd =
          NextGuidanceAction(*plan_, pose_, setup_.limits);
      predicted_ = IntegrateArc(pose_, cmd, setup_.limits.dt);
      return {cmd, ActionSource::kGuidance};
    }
    plan_.reset();
  }
  predicted_.reset();
  return {policy_action, ActionSource::kPolicy};
}

}  // namespace escape
