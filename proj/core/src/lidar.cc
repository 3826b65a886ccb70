#include "escape/lidar.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "escape/errors.h"

namespace escape {
namespace {

// Distance along the ray to the closed segment [a, b], or +inf.
double RaySegment(Vec2 origin, Vec2 dir, Vec2 a, Vec2 b) {
  const Vec2 e = b - a;
  const Vec2 oa = a - origin;
  const double denom = dir.Cross(e);
  if (denom == 0.0) {
    if (oa.Cross(dir) != 0.0) return std::numeric_limits<double>::infinity();
    // Collinear: nearest endpoint in front of the origin.
    const double ta = oa.Dot(dir);
    const double tb = (b - origin).Dot(dir);
    if (ta < 0.0 && tb < 0.0) return std::numeric_limits<double>::infinity();
    if (ta < 0.0 || tb < 0.0) return 0.0;
    return std::min(ta, tb);
  }
  const double t = oa.Cross(e) / denom;
  const double u = oa.Cross(dir) / denom;
  if (t < 0.0 || u < 0.0 || u > 1.0) {
    return std::numeric_limits<double>::infinity();
  }
  return t;
}

class RayFan {
 public:
  RayFan(const Pose2& pose, const LidarSpec& spec)
      : origin_{pose.x, pose.y},
        theta0_(pose.theta),
        step_(2.0 * std::numbers::pi / spec.ray_count),
        n_(spec.ray_count),
        dirs_(spec.ray_count),
        ranges_(spec.ray_count, spec.max_range) {
    for (int j = 0; j < n_; ++j) {
      const double angle = pose.theta + spec.RayAngle(j);
      dirs_[j] = {std::cos(angle), std::sin(angle)};
    }
  }

  // Only rays inside the angular interval the edge subtends are tested.
  void Cast(Vec2 a, Vec2 b) {
    const Vec2 ra = a - origin_;
    const Vec2 rb = b - origin_;
    const double angle_a = std::atan2(ra.y, ra.x);
    const double sweep = NormalizeAngle(std::atan2(rb.y, rb.x) - angle_a);
    const double lo = sweep >= 0.0 ? angle_a : angle_a + sweep;
    const long first =
        static_cast<long>(std::floor((lo - theta0_) / step_)) - 1;
    const long count = static_cast<long>(std::ceil(std::abs(sweep) / step_)) + 3;
    for (long k = first; k < first + count && k - first < n_; ++k) {
      const int j = static_cast<int>(((k % n_) + n_) % n_);
      const double t = RaySegment(origin_, dirs_[j], a, b);
      if (t < ranges_[j]) ranges_[j] = t;
    }
  }

  std::vector<double>& ranges() { return ranges_; }

 private:
  Vec2 origin_;
  double theta0_;
  double step_;
  int n_;
  std::vector<Vec2> dirs_;
  std::vector<double> ranges_;
};

}  // namespace

std::optional<double> RayPolygonDistance(Vec2 origin, Vec2 dir,
                                         const Polygon& poly) {
  if (poly.Contains(origin)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  const auto& v = poly.vertices();
  for (std::size_t i = 0; i < v.size(); ++i) {
    best = std::min(best, RaySegment(origin, dir, v[i], v[(i + 1) % v.size()]));
  }
  if (!std::isfinite(best)) return std::nullopt;
  return best;
}

ScanFrame SimulateScan(const Pose2& pose, const ObstacleSet& obs,
                       const LidarSpec& spec, std::mt19937_64* noise) {
  if (!spec.Valid()) throw InvalidArgument("invalid lidar spec");
  const Vec2 origin{pose.x, pose.y};
  if (obs.bounds) {
    const Box& arena = *obs.bounds;
    if (!(origin.x > arena.min_x && origin.x < arena.max_x &&
          origin.y > arena.min_y && origin.y < arena.max_y)) {
      throw InvalidPose("lidar origin outside the arena");
    }
  }
  for (const Polygon& p : obs.polygons) {
    if (p.Contains(origin)) {
      throw InvalidPose("lidar origin inside an obstacle");
    }
  }

  RayFan fan(pose, spec);
  if (obs.bounds) {
    const Box& b = *obs.bounds;
    const Vec2 c00{b.min_x, b.min_y}, c10{b.max_x, b.min_y},
        c11{b.max_x, b.max_y}, c01{b.min_x, b.max_y};
    fan.Cast(c00, c10);
    fan.Cast(c10, c11);
    fan.Cast(c11, c01);
    fan.Cast(c01, c00);
  }
  for (const Polygon& p : obs.polygons) {
    const auto& v = p.vertices();
    for (std::size_t i = 0; i < v.size(); ++i) {
      fan.Cast(v[i], v[(i + 1) % v.size()]);
    }
  }

  ScanFrame frame;
  frame.ranges = std::move(fan.ranges());
  frame.pose_stamp = pose;
  if (spec.noise_sigma > 0.0 && noise != nullptr) {
    std::normal_distribution<double> gauss(0.0, spec.noise_sigma);
    for (double& r : frame.ranges) {
      r = std::clamp(r + gauss(*noise), 1e-6, spec.max_range);
    }
  }
  return frame;
}

}  // namespace escape
