#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>

#include "escape/escape_env.h"
#include "escape/grid_planner.h"

namespace escape {

struct EpisodeInfo {
  int index = 0;  // running episode number within a benchmark run
  std::uint64_t seed = 0;
  std::string label;  // scenario class
};

// A controller driven by the benchmark runner. Begin may decline an episode
// (a planner that finds no path); the episode then counts as a planning
// failure without being executed.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual std::string Label() const = 0;
  virtual bool NeedsObservations() const { return true; }
  // True for planner + executor policies whose success decomposes into
  // planning and control.
  virtual bool IsPlanner() const { return false; }

  virtual bool Begin(const EscapeEnv& env, const Observation& obs,
                     const EpisodeInfo& info) = 0;
  virtual VelocityCommand Act(const EscapeEnv& env, const Observation& obs) = 0;
  virtual void Observe(const StepResult& /*result*/) {}
  // Called once per episode after the last step or a failure.
  virtual void End(bool /*failed*/, const std::string& /*reason*/) {}
};

// Inflated A* plan converted to rotate/translate primitives, executed open
// loop on the plan's targets.
class GuidancePolicy : public Policy {
 public:
  explicit GuidancePolicy(double inflation, PlannerOptions options = {});

  std::string Label() const override;
  bool NeedsObservations() const override { return false; }
  bool IsPlanner() const override { return true; }
  bool Begin(const EscapeEnv& env, const Observation& obs,
             const EpisodeInfo& info) override;
  VelocityCommand Act(const EscapeEnv& env, const Observation& obs) override;

  double inflation() const { return inflation_; }

 private:
  double inflation_;
  PlannerOptions options_;
  std::optional<RtrPlan> plan_;
  // Reused while consecutive episodes share an obstacle set.
  std::optional<ObstacleSet> cached_obstacles_;
  std::unique_ptr<GuidancePlanner> planner_;
};

// Uniform over the mask-valid discrete actions (all 42 when none is valid).
class RandomPolicy : public Policy {
 public:
  explicit RandomPolicy(std::uint64_t seed);

  std::string Label() const override { return "random"; }
  bool Begin(const EscapeEnv& env, const Observation& obs,
             const EpisodeInfo& info) override;
  VelocityCommand Act(const EscapeEnv& env, const Observation& obs) override;

 private:
  std::uint64_t seed_;
  std::mt19937_64 rng_;
};

std::uint64_t MixSeed(std::uint64_t a, std::uint64_t b);

}  // namespace escape
