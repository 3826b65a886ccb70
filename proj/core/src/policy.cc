#include "escape/policy.h"

#include <cstdio>

namespace escape {

std::uint64_t MixSeed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

GuidancePolicy::GuidancePolicy(double inflation, PlannerOptions options)
    : inflation_(inflation), options_(options) {
  if (!(inflation >= 0.0)) throw InvalidArgument("inflation must be >= 0");
  options_.max_inflation = std::max(options_.max_inflation, inflation);
}

std::string GuidancePolicy::Label() const {
  char buf[48];
  std::snprintf(buf, sizeof buf, "guidance@%.4f", inflation_);
  return buf;
}

bool GuidancePolicy::Begin(const EscapeEnv& env, const Observation&,
                           const EpisodeInfo&) {
  const ObstacleSet& obs = env.scenario().obstacles;
  if (!planner_ || !obs.bounds || !cached_obstacles_ ||
      !(*cached_obstacles_ == obs)) {
    const Vec2 extra[] = {{env.start().x, env.start().y},
                          {env.goal().x, env.goal().y}};
    planner_ = std::make_unique<GuidancePlanner>(obs, options_, extra);
    cached_obstacles_ = obs;
  }
  GuidancePlan plan = planner_->Plan(env.start(), env.goal(), inflation_);
  if (!plan.found()) {
    plan_.reset();
    return false;
  }
  plan_ = std::move(plan.rtr);
  return true;
}

VelocityCommand GuidancePolicy::Act(const EscapeEnv& env, const Observation&) {
  if (!plan_) throw StateError("guidance policy has no plan");
  AdvancePlan(*plan_, env.pose());
  if (plan_->Exhausted()) return {0.0, 0.0};
  return NextGuidanceAction(*plan_, env.pose(), env.setup().limits);
}

RandomPolicy::RandomPolicy(std::uint64_t seed) : seed_(seed), rng_(seed) {}

bool RandomPolicy::Begin(const EscapeEnv&, const Observation&,
                         const EpisodeInfo& info) {
  rng_.seed(MixSeed(seed_, info.seed));
  return true;
}

VelocityCommand RandomPolicy::Act(const EscapeEnv& env, const Observation& obs) {
  std::vector<int> candidates;
  for (int i = 0; i < static_cast<int>(kActionCount); ++i) {
    if (obs.mask.valid[i]) candidates.push_back(i);
  }
  if (candidates.empty()) {
    for (int i = 0; i < static_cast<int>(kActionCount); ++i) candidates.push_back(i);
  }
  const std::size_t pick = std::uniform_int_distribution<std::size_t>(
      0, candidates.size() - 1)(rng_);
  return env.actions()[candidates[pick]].command;
}

}  // namespace escape
