#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "escape/action_mask.h"
#include "escape/geometry.h"
#include "escape/grid_planner.h"
#include "escape/kinematics.h"
#include "escape/lidar.h"
#include "escape/scenario.h"

namespace escape {

class TraceWriter;

enum class CurriculumStage { kFixedGoalNearEntrance, kRandomizedGoal };
enum class TerminalCause { kNone, kSuccess, kCollision, kTimeout };
enum class ActionSource { kPolicy, kGuidance };

std::string_view CauseName(TerminalCause cause);
std::optional<TerminalCause> ParseCause(std::string_view name);
std::string_view SourceName(ActionSource source);
std::optional<ActionSource> ParseSource(std::string_view name);

struct RewardWeights {
  double iou = 1.0;
  double distance = 0.5;
  double time = 0.1;
};

struct RewardBreakdown {
  double iou_term = 0.0;
  double distance_term = 0.0;
  double time_term = 0.0;
  double total = 0.0;

  friend bool operator==(const RewardBreakdown&,
                         const RewardBreakdown&) = default;
};

struct EpisodeConfig {
  int max_steps = 400;
  double success_iou = 0.8;
  CurriculumStage stage = CurriculumStage::kFixedGoalNearEntrance;
  bool hybrid_guidance = false;
  // Recorded for trainers; the environment does not discount.
  double discount = 0.99;
  RewardWeights weights;
  double time_constant = 0.5;
  double collision_ds = 0.005;
  int reset_retries = 64;
  // Skip scan and mask assembly (planner-only runs).
  bool observe = true;

  // Throws InvalidArgument.
  void Validate() const;
};

// Goal relative to the robot body frame: distance, bearing and heading
// offset as cos/sin pairs.
struct TargetFeatures {
  double distance = 0.0;
  double cos_bearing = 1.0;
  double sin_bearing = 0.0;
  double cos_heading = 1.0;
  double sin_heading = 0.0;

  friend bool operator==(const TargetFeatures&,
                         const TargetFeatures&) = default;
};

TargetFeatures ComputeTarget(const Pose2& pose, const Pose2& goal);

struct Observation {
  std::vector<double> scan;
  TargetFeatures target;
  ActionValidity mask;
};

struct StepResult {
  Observation observation;
  RewardBreakdown reward;
  bool terminal = false;
  TerminalCause cause = TerminalCause::kNone;
  ActionSource source = ActionSource::kPolicy;
  VelocityCommand command;
  Pose2 pose;
  int step = 0;
};

RewardBreakdown ComputeReward(const Footprint& fp, const MotionLimits& limits,
                              const Pose2& prev, const Pose2& next,
                              const Pose2& goal, const EpisodeConfig& config);

// Everything that stays fixed across episodes. The boundary table is shared
// read-only between environments.
struct EnvSetup {
  Footprint footprint;
  MotionLimits limits;
  LidarSpec lidar;
  MaskOptions mask;
  std::shared_ptr<const BoundaryTable> table;
  PlannerOptions planner;

  // Fills `table` when empty.
  static EnvSetup Default();
};

class EscapeEnv {
 public:
  explicit EscapeEnv(EnvSetup setup);

  // Throws InvalidPose when the start collides (or no collision-free start
  // is found under kRandomizedGoal).
  Observation Reset(const Scenario& scenario, const EpisodeConfig& config,
                    std::uint64_t seed);
  // Throws StateError after a terminal step or before Reset, RangeError for
  // commands outside the motion limits.
  StepResult Step(const VelocityCommand& cmd,
                  ActionSource source = ActionSource::kPolicy);
  StepResult StepAction(int index);
  Observation Observe() const;

  // Guidance command when an inflated-grid plan from the current pose
  // exists, otherwise `policy_action`. Throws StateError outside training
  // mode.
  std::pair<VelocityCommand, ActionSource> HybridAction(
      const VelocityCommand& policy_action);

  void SetTraceWriter(TraceWriter* writer) { trace_ = writer; }

  const EnvSetup& setup() const { return setup_; }
  const DiscreteActionSet& actions() const { return actions_; }
  const Scenario& scenario() const { return scenario_; }
  const EpisodeConfig& config() const { return config_; }
  const Pose2& pose() const { return pose_; }
  const Pose2& start() const { return start_; }
  const Pose2& goal() const { return goal_; }
  int step_count() const { return steps_; }
  bool active() const { return active_; }

 private:
  EnvSetup setup_;
  DiscreteActionSet actions_;
  Scenario scenario_;
  EpisodeConfig config_;
  Pose2 start_;
  Pose2 goal_;
  Pose2 pose_;
  Polygon goal_body_;
  double goal_distance_ = 0.0;
  int steps_ = 0;
  bool active_ = false;
  TraceWriter* trace_ = nullptr;

  std::unique_ptr<GuidancePlanner> planner_;
  std::optional<RtrPlan> plan_;
  std::optional<Pose2> predicted_;
};

}  // namespace escape
