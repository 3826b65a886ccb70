#pragma once

#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "escape/geometry.h"
#include "escape/kinematics.h"

namespace escape {

// Single-line 2D Lidar mounted at the robot center, ray 0 along the heading.
struct LidarSpec {
  int ray_count = 500;
  double max_range = 8.0;
  // Standard deviation of additive Gaussian range noise, meters.
  double noise_sigma = 0.0;

  bool Valid() const { return ray_count >= 3 && max_range > 0.0; }
  // Body-frame angle of ray j.
  double RayAngle(int j) const {
    return 2.0 * std::numbers::pi * j / ray_count;
  }

  friend bool operator==(const LidarSpec&, const LidarSpec&) = default;
};

struct ScanFrame {
  std::vector<double> ranges;
  Pose2 pose_stamp;
};

// Ranges to the nearest obstacle or arena wall along every ray, clamped to
// max_range. Throws InvalidPose when the sensor origin lies inside (or on) an
// obstacle or outside the arena. `noise` is only drawn from when
// spec.noise_sigma > 0.
ScanFrame SimulateScan(const Pose2& pose, const ObstacleSet& obs,
                       const LidarSpec& spec, std::mt19937_64* noise = nullptr);

// Distance from `origin` along unit direction `dir` to the first point of
// `poly`, or nullopt if the ray misses.
std::optional<double> RayPolygonDistance(Vec2 origin, Vec2 dir,
                                         const Polygon& poly);

}  // namespace escape
