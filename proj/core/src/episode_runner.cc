#include "escape/episode_runner.h"

#include <algorithm>
#include <map>

#include "escape/errors.h"
#include "escape/ipc.h"

namespace escape {

EpisodeOutcome RunEpisode(EscapeEnv& env, Policy& policy,
                          const Scenario& scenario, const EpisodeConfig& config,
                          const EpisodeInfo& info) {
  EpisodeOutcome out;
  out.label = info.label;
  EpisodeConfig cfg = config;
  cfg.hybrid_guidance = false;
  cfg.observe = policy.NeedsObservations();
  Observation obs = env.Reset(scenario, cfg, info.seed);
  try {
    if (!policy.Begin(env, obs, info)) {
      out.planned = false;
      policy.End(false, {});
      return out;
    }
    while (env.active()) {
      const VelocityCommand cmd = policy.Act(env, obs);
      StepResult r = env.Step(cmd);
      policy.Observe(r);
      out.steps = r.step;
      if (r.terminal) {
        out.cause = r.cause;
        out.success = r.cause == TerminalCause::kSuccess;
      }
      obs = std::move(r.observation);
    }
  } catch (const ChannelClosed& e) {
    out.protocol_failure = true;
    out.error = e.what();
    throw;
  } catch (const ProtocolError& e) {
    out.protocol_failure = true;
    out.error = e.what();
  } catch (const RangeError& e) {
    out.protocol_failure = true;
    out.error = e.what();
  }
  policy.End(out.protocol_failure, out.error);
  return out;
}

std::uint64_t BenchmarkConfigHash(const std::vector<Scenario>& scenarios,
                                  const std::string& policy_label,
                                  const BenchmarkOptions& options) {
  std::uint64_t h = Fnv1a(policy_label);
  for (const Scenario& s : scenarios) h = Fnv1a(SerializeScenario(s), h);
  const EpisodeConfig& e = options.episode;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d|%llu|%d|%.17g|%d|%.17g|%.17g|%.17g|%.17g",
                options.episodes_per_scenario,
                static_cast<unsigned long long>(options.seed), e.max_steps,
                e.success_iou, static_cast<int>(e.stage), e.weights.iou,
                e.weights.distance, e.weights.time, e.time_constant);
  return Fnv1a(buf, h);
}

BenchmarkReport RunBenchmark(const std::vector<Scenario>& scenarios,
                             Policy& policy, EscapeEnv& env,
                             const BenchmarkOptions& options,
                             std::vector<EpisodeOutcome>* outcomes) {
  if (options.episodes_per_scenario <= 0) {
    throw InvalidArgument("episodes per scenario must be positive");
  }
  BenchmarkReport report;
  report.policy = policy.Label();
  report.planner = policy.IsPlanner();
  if (const auto* g = dynamic_cast<const GuidancePolicy*>(&policy)) {
    report.inflation = g->inflation();
  }
  report.seed = options.seed;
  report.episodes_per_scenario = options.episodes_per_scenario;
  report.config_hash = BenchmarkConfigHash(scenarios, report.policy, options);

  std::map<std::string, ClassStats> stats;
  bool channel_closed = false;
  std::string closed_reason;
  int index = 0;
  for (const Scenario& scenario : scenarios) {
    const std::string label = scenario.features.Label();
    for (int e = 0; e < options.episodes_per_scenario; ++e, ++index) {
      EpisodeInfo info{index, MixSeed(options.seed, MixSeed(scenario.seed, e)),
                       label};
      EpisodeOutcome o;
      o.label = label;
      if (channel_closed) {
        o.protocol_failure = true;
        o.error = closed_reason;
      } else {
        try {
          o = RunEpisode(env, policy, scenario, options.episode, info);
        } catch (const ChannelClosed& ex) {
          channel_closed = true;
          closed_reason = ex.what();
          o.protocol_failure = true;
          o.error = closed_reason;
        }
      }
      ClassStats& s = stats[label];
      s.label = label;
      ++s.episodes;
      if (o.planned) ++s.planned;
      if (o.success) {
        ++s.successes;
        s.success_steps += o.steps;
      }
      if (o.cause == TerminalCause::kCollision) ++s.collisions;
      if (o.cause == TerminalCause::kTimeout) ++s.timeouts;
      if (o.protocol_failure) ++s.protocol_failures;
      if (outcomes) outcomes->push_back(std::move(o));
    }
  }

  for (ScenarioClass c : kScenarioClasses) {
    auto it = stats.find(FeaturesOf(c).Label());
    if (it == stats.end()) continue;
    report.classes.push_back(it->second);
    stats.erase(it);
  }
  for (auto& [label, s] : stats) report.classes.push_back(s);
  report.overall.label = "overall";
  for (const ClassStats& s : report.classes) report.overall.Merge(s);
  return report;
}

}  // namespace escape
