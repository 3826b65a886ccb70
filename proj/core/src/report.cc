#include "escape/report.h"

#include <cstdio>
#include <fstream>

#include "escape/errors.h"
#include "escape/scenario.h"
#include <nlohmann/json.hpp>

namespace escape {
namespace {

double Ratio(long long num, long long den) {
  return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
}

nlohmann::json StatsJson(const ClassStats& s, bool planner) {
  nlohmann::json j;
  j["episodes"] = s.episodes;
  j["successes"] = s.successes;
  j["collisions"] = s.collisions;
  j["timeouts"] = s.timeouts;
  j["protocol_failures"] = s.protocol_failures;
  j["total_success_rate"] = s.TotalSuccessRate();
  j["collision_rate"] = s.CollisionRate();
  j["mean_steps"] = s.MeanSteps();
  if (planner) {
    j["planned"] = s.planned;
    j["planning_success_rate"] = s.PlanningSuccessRate();
    j["control_success_rate"] = s.ControlSuccessRate();
  } else {
    j["planning_success_rate"] = nullptr;
    j["control_success_rate"] = s.ControlSuccessRate();
  }
  return j;
}

}  // namespace

double ClassStats::TotalSuccessRate() const { return Ratio(successes, episodes); }
double ClassStats::PlanningSuccessRate() const { return Ratio(planned, episodes); }
double ClassStats::ControlSuccessRate() const { return Ratio(successes, planned); }
double ClassStats::CollisionRate() const { return Ratio(collisions, episodes); }
double ClassStats::MeanSteps() const { return Ratio(success_steps, successes); }

void ClassStats::Merge(const ClassStats& o) {
  episodes += o.episodes;
  planned += o.planned;
  successes += o.successes;
  collisions += o.collisions;
  timeouts += o.timeouts;
  protocol_failures += o.protocol_failures;
  success_steps += o.success_steps;
}

const ClassStats* BenchmarkReport::Find(const std::string& label) const {
  for (const ClassStats& c : classes) {
    if (c.label == label) return &c;
  }
  return nullptr;
}

std::string FormatReport(const BenchmarkReport& r) {
  nlohmann::json j;
  j["policy"] = r.policy;
  j["inflation"] = r.inflation ? nlohmann::json(*r.inflation) : nlohmann::json();
  j["seed"] = r.seed;
  j["episodes_per_scenario"] = r.episodes_per_scenario;
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(r.config_hash));
  j["config_hash"] = hash;
  nlohmann::json classes = nlohmann::json::array();
  for (const ClassStats& c : r.classes) {
    nlohmann::json entry = StatsJson(c, r.planner);
    entry["class"] = c.label;
    classes.push_back(std::move(entry));
  }
  j["classes"] = std::move(classes);
  j["overall"] = StatsJson(r.overall, r.planner);
  return j.dump(2) + "\n";
}

void WriteReport(const BenchmarkReport& report,
                 const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << FormatReport(report);
  if (!out) throw Error("write failed: " + path.string());
}

std::uint64_t Fnv1a(std::string_view bytes, std::uint64_t hash) {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace escape
