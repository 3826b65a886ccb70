#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "escape/escape_env.h"

namespace escape {

struct ClassStats {
  std::string label;
  int episodes = 0;
  int planned = 0;
  int successes = 0;
  int collisions = 0;
  int timeouts = 0;
  int protocol_failures = 0;
  long long success_steps = 0;

  double TotalSuccessRate() const;
  // Planned / episodes; 1 for policies without a planning phase.
  double PlanningSuccessRate() const;
  // Successes among planned episodes.
  double ControlSuccessRate() const;
  double CollisionRate() const;
  // Mean step count of successful episodes, 0 when there are none.
  double MeanSteps() const;

  void Merge(const ClassStats& other);
  friend bool operator==(const ClassStats&, const ClassStats&) = default;
};

struct BenchmarkReport {
  std::string policy;
  bool planner = false;
  std::optional<double> inflation;
  std::uint64_t seed = 0;
  int episodes_per_scenario = 1;
  std::uint64_t config_hash = 0;
  // Known classes in N+C+S+L ... simple order, others after.
  std::vector<ClassStats> classes;
  ClassStats overall;

  const ClassStats* Find(const std::string& label) const;
};

// Deterministic JSON (sorted keys, no timestamps).
std::string FormatReport(const BenchmarkReport& report);
void WriteReport(const BenchmarkReport& report,
                 const std::filesystem::path& path);

std::uint64_t Fnv1a(std::string_view bytes,
                    std::uint64_t hash = 0xcbf29ce484222325ULL);

}  // namespace escape
