#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "escape/errors.h"
#include "escape/geometry.h"
#include "escape/kinematics.h"

namespace escape {

enum class Feature : std::uint8_t {
  kNarrowExit = 1,
  kConstrainedSpace = 2,
  kSparseObstacles = 4,
  kLongCorridor = 8,
};

std::string_view FeatureName(Feature f);
std::optional<Feature> ParseFeature(std::string_view name);

class FeatureSet {
 public:
  FeatureSet() = default;
  FeatureSet(std::initializer_list<Feature> features) {
    for (Feature f : features) Insert(f);
  }

  bool Has(Feature f) const { return (bits_ & static_cast<std::uint8_t>(f)) != 0; }
  void Insert(Feature f) { bits_ |= static_cast<std::uint8_t>(f); }
  bool Empty() const { return bits_ == 0; }
  std::uint8_t bits() const { return bits_; }
  std::vector<Feature> List() const;
  // Letters in N, C, S, L order joined by '+', or "simple".
  std::string Label() const;

  friend bool operator==(const FeatureSet&, const FeatureSet&) = default;

 private:
  std::uint8_t bits_ = 0;
};

// The five scenario kinds of the benchmark test set.
enum class ScenarioClass { kNCSL, kNCS, kNC, kN, kSimple };
inline constexpr ScenarioClass kScenarioClasses[] = {
    ScenarioClass::kNCSL, ScenarioClass::kNCS, ScenarioClass::kNC,
    ScenarioClass::kN, ScenarioClass::kSimple};
FeatureSet FeaturesOf(ScenarioClass c);

struct GoalTolerance {
  double position = 0.05;  // m
  double heading = 0.35;   // rad

  friend bool operator==(const GoalTolerance&, const GoalTolerance&) = default;
};

struct Scenario {
  ObstacleSet obstacles;
  Pose2 start;
  Pose2 goal;
  GoalTolerance tolerance;
  FeatureSet features;
  std::uint64_t seed = 0;
  // Trajectory the scenario was built around; collision-free by construction.
  std::vector<Pose2> witness_path;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;

  bool Valid() const { return lo <= hi; }
  friend bool operator==(const Range&, const Range&) = default;
};

// Numeric cutoffs behind the four feature tags. NarrowExit compares against
// the footprint's circumscribed radius and needs no knob.
struct FeatureThresholds {
  double constrained_clearance = 0.05;  // contour-to-obstacle distance, m
  double long_corridor_length = 3.0;    // witness path length, m
  Range sparse_gap{0.15, 0.30};         // inter-obstacle gap band, m
  int sparse_min_gaps = 2;
};

struct FeatureMeasurements {
  // Smallest robot-center-to-obstacle distance over the witness poses.
  double min_center_clearance = 0.0;
  // Smallest footprint-to-obstacle distance over the witness poses.
  double min_contour_clearance = 0.0;
  int gaps_in_band = 0;
  double path_length = 0.0;
};

FeatureMeasurements MeasureFeatures(const Scenario& scenario,
                                    const Footprint& fp,
                                    const FeatureThresholds& thresholds);
FeatureSet TagFeatures(const FeatureMeasurements& m, const Footprint& fp,
                       const FeatureThresholds& thresholds);

class GenerationError : public Error {
 public:
  using Error::Error;
};

struct GeneratorConfig {
  Box arena{0.0, 0.0, 5.0, 5.0};
  Footprint footprint;
  MotionLimits limits;
  Range path_length{1.2, 2.6};
  int max_walk_steps = 600;
  Range obstacle_count{25, 45};
  // Rectangle edge lengths; the lower bound is the Lidar chord floor.
  Range obstacle_size{0.10, 0.50};
  double rotated_fraction = 0.3;
  // Extra distance kept between obstacles and the walk's footprint envelope.
  Range clearance{0.075, 0.15};
  // Center-to-wall half opening of a doorway built around the goal pose;
  // unset for no doorway.
  std::optional<Range> exit_width;
  // true: add inter-obstacle gaps inside the sparse band; false: reject any
  // obstacle that would create one.
  bool sparse_gaps = false;
  // When set, attempts are retried until the measured tags match exactly.
  std::optional<FeatureSet> required_features;
  FeatureThresholds thresholds;
  int max_attempts = 60;
  int placement_tries = 500;

  // Throws InvalidArgument for empty ranges or sub-floor obstacle sizes.
  void Validate() const;

  static GeneratorConfig ForClass(ScenarioClass c);
};

// Random walk first, obstacles around its envelope second. Deterministic in
// (config, seed). Throws GenerationError after config.max_attempts.
Scenario Generate(const GeneratorConfig& config, std::uint64_t seed);

struct BenchmarkSets {
  std::vector<Scenario> train;
  std::vector<Scenario> test;
};

inline constexpr std::uint64_t kTestSeedOffset = 1'000'000'000ULL;

// Train seeds are seed_base + i, test seeds seed_base + kTestSeedOffset + i.
// Both sets cycle through the five scenario classes; the test set is
// stratified into equal-sized strata.
BenchmarkSets BuildBenchmarkSets(const GeneratorConfig& base, int train_count,
                                 int test_count, std::uint64_t seed_base);
ScenarioClass ClassForIndex(int index, int count);
GeneratorConfig ConfigForClass(const GeneratorConfig& base, ScenarioClass c);

// JSON scenario files.
inline constexpr int kScenarioFormatVersion = 1;
std::string SerializeScenario(const Scenario& scenario);
// Throws ParseError with the offending line or field.
Scenario ParseScenario(std::string_view text);
void SaveScenario(const Scenario& scenario, const std::filesystem::path& path);
Scenario LoadScenario(const std::filesystem::path& path);

}  // namespace escape
