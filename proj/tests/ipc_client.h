#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "escape/grid_planner.h"
#include "escape/ipc.h"
#include "escape/scenario.h"

namespace escape::testing {

using nlohmann::json;

// Minimal external policy for tests. Subclasses answer observations; an
// empty reply means "stay silent".
class ScriptedClient {
 public:
  virtual ~ScriptedClient() = default;
  virtual void OnReset(const json& /*reset*/) {}
  virtual std::string OnObservation(const json& obs) = 0;
  virtual void OnResult(const json& /*result*/) {}

  int protocol = kProtocolVersion;
  json hello;
  int failures_seen = 0;
  int episodes_seen = 0;
  bool got_error = false;
  bool got_bye = false;

  // Runs until the server says goodbye or hangs up.
  void Run(LineChannel& ch) {
    try {
      auto first = ch.ReadLine(std::chrono::seconds(30));
      if (!first) return;
      hello = json::parse(*first);
      ch.WriteLine(json{{"type", "hello"}, {"protocol", protocol}}.dump());
      while (true) {
        auto line = ch.ReadLine(std::chrono::seconds(30));
        if (!line) return;
        const json j = json::parse(*line);
        const std::string type = j.at("type");
        if (type == "reset") {
          ++episodes_seen;
          OnReset(j);
        } else if (type == "observation") {
          const std::string reply = OnObservation(j);
          if (!reply.empty()) ch.WriteLine(reply);
        } else if (type == "result") {
          OnResult(j);
        } else if (type == "episode_failed") {
          ++failures_seen;
        } else if (type == "error") {
          got_error = true;
          return;
        } else if (type == "bye") {
          got_bye = true;
          return;
        }
      }
    } catch (const ChannelClosed&) {
    }
  }
};

inline std::string IndexAction(int index) {
  return json{{"type", "action"}, {"index", index}}.dump();
}

// Uniform over mask-valid actions, seeded per episode.
class RandomMaskClient : public ScriptedClient {
 public:
  explicit RandomMaskClient(std::uint64_t seed) : seed_(seed) {}
  void OnReset(const json& r) override { rng_.seed(seed_ ^ r.at("seed").get<std::uint64_t>()); }
  std::string OnObservation(const json& obs) override {
    const std::string mask = obs.at("mask");
    std::vector<int> valid;
    for (int i = 0; i < static_cast<int>(mask.size()); ++i) {
      if (mask[i] == '1') valid.push_back(i);
    }
    if (valid.empty()) return IndexAction(0);
    return IndexAction(valid[std::uniform_int_distribution<std::size_t>(
        0, valid.size() - 1)(rng_)]);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 rng_;
};

inline Pose2 PoseFrom(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

// Plans on its own copy of the scenario and replies with guidance commands.
class GuidanceClient : public ScriptedClient {
 public:
  GuidanceClient(double inflation, MotionLimits limits)
      : inflation_(inflation), limits_(limits) {}

  void OnReset(const json& r) override {
    const Scenario s = ParseScenario(r.at("scenario").dump());
    pose_ = PoseFrom(r.at("start"));
    const Pose2 goal = PoseFrom(r.at("goal"));
    const Vec2 extra[] = {{pose_.x, pose_.y}, {goal.x, goal.y}};
    PlannerOptions opts;
    opts.max_inflation = std::max(opts.max_inflation, inflation_);
    GuidancePlanner planner(s.obstacles, opts, extra);
    GuidancePlan plan = planner.Plan(pose_, goal, inflation_);
    plan_ = plan.found() ? std::optional<RtrPlan>(plan.rtr) : std::nullopt;
  }
  std::string OnObservation(const json&) override {
    VelocityCommand c{0, 0};
    if (plan_) {
      AdvancePlan(*plan_, pose_);
      if (!plan_->Exhausted()) c = NextGuidanceAction(*plan_, pose_, limits_);
    }
    return json{{"type", "action"}, {"omega", c.omega}, {"v", c.v}}.dump();
  }
  void OnResult(const json& r) override { pose_ = PoseFrom(r.at("pose")); }

 private:
  double inflation_;
  MotionLimits limits_;
  Pose2 pose_;
  std::optional<RtrPlan> plan_;
};

}  // namespace escape::testing
