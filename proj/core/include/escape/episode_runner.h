#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "escape/escape_env.h"
#include "escape/policy.h"
#include "escape/report.h"

namespace escape {

class TraceWriter;

struct BenchmarkOptions {
  int episodes_per_scenario = 1;
  std::uint64_t seed = 0;
  EpisodeConfig episode = [] {
    EpisodeConfig e;
    e.max_steps = 600;
    return e;
  }();
};

struct EpisodeOutcome {
  std::string label;
  bool planned = true;
  bool success = false;
  TerminalCause cause = TerminalCause::kNone;
  int steps = 0;
  bool protocol_failure = false;
  std::string error;
};

// Runs one episode: reset, Policy::Begin, then steps until terminal.
// Protocol and range errors raised by the policy end the episode as a
// protocol failure.
EpisodeOutcome RunEpisode(EscapeEnv& env, Policy& policy,
                          const Scenario& scenario, const EpisodeConfig& config,
                          const EpisodeInfo& info);

// Evaluation mode: hybrid guidance is always off.
BenchmarkReport RunBenchmark(const std::vector<Scenario>& scenarios,
                             Policy& policy, EscapeEnv& env,
                             const BenchmarkOptions& options,
                             std::vector<EpisodeOutcome>* outcomes = nullptr);

std::uint64_t BenchmarkConfigHash(const std::vector<Scenario>& scenarios,
                                  const std::string& policy_label,
                                  const BenchmarkOptions& options);

}  // namespace escape
