#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "escape/kinematics.h"

namespace escape {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double Dot(Vec2 o) const { return x * o.x + y * o.y; }
  double Cross(Vec2 o) const { return x * o.y - y * o.x; }
  double Norm() const { return std::hypot(x, y); }

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

// Axis-aligned rectangle, closed.
struct Box {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  bool Overlaps(const Box& o) const {
    return min_x <= o.max_x && o.min_x <= max_x && min_y <= o.max_y &&
           o.min_y <= max_y;
  }
  bool Contains(Vec2 p) const {
    return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
  }
  double Width() const { return max_x - min_x; }
  double Height() const { return max_y - min_y; }

  friend bool operator==(const Box&, const Box&) = default;
};

// Simple polygon with counter-clockwise vertices and positive area.
class Polygon {
 public:
  Polygon() = default;

  // Validates simplicity and non-zero area; clockwise input is reversed.
  // Throws InvalidArgument otherwise.
  explicit Polygon(std::vector<Vec2> vertices);

  // Skips validation; `vertices` must already be convex and counter-clockwise.
  static Polygon FromConvexCcw(std::vector<Vec2> vertices);

  // Rectangle with the given center, half extents and rotation.
  static Polygon Rectangle(Vec2 center, double half_x, double half_y,
                           double angle = 0.0);

  const std::vector<Vec2>& vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }
  const Box& bounds() const { return bounds_; }
  double Area() const;
  bool IsConvex() const;
  // Closed containment (boundary points count as inside).
  bool Contains(Vec2 p) const;

  friend bool operator==(const Polygon& a, const Polygon& b) {
    return a.vertices_ == b.vertices_;
  }

 private:
  void ComputeBounds();

  std::vector<Vec2> vertices_;
  Box bounds_;
};

// Axis-aligned rectangular robot body in its own frame, centered on the
// rotation center.
struct Footprint {
  double half_width = 0.175;
  double half_length = 0.175;

  double CircumscribedRadius() const {
    return std::hypot(half_width, half_length);
  }
  double InscribedRadius() const { return std::min(half_width, half_length); }
  Footprint Expanded(double margin) const {
    return {half_width + margin, half_length + margin};
  }

  friend bool operator==(const Footprint&, const Footprint&) = default;
};

struct ObstacleSet {
  std::vector<Polygon> polygons;
  // Absent for an unbounded arena.
  std::optional<Box> bounds;

  friend bool operator==(const ObstacleSet&, const ObstacleSet&) = default;
};

Polygon FootprintAt(const Footprint& fp, const Pose2& pose);

// Closed-set intersection test for simple polygons.
bool Intersects(const Polygon& a, const Polygon& b);

// Minimum Euclidean distance; 0 when the polygons intersect.
double Distance(const Polygon& a, const Polygon& b);
double Distance(const Polygon& poly, Vec2 p);
double DistanceToSegment(Vec2 p, Vec2 a, Vec2 b);

// Intersection area over union area. Both polygons must be convex.
double Iou(const Polygon& a, const Polygon& b);
double IntersectionArea(const Polygon& a, const Polygon& b);

// True iff the footprint at `pose` touches or overlaps an obstacle, or
// touches or leaves the arena bounds.
bool Collides(const Footprint& fp, const Pose2& pose, const ObstacleSet& obs);
bool Collides(const Polygon& body, const ObstacleSet& obs);

// Upper bound on the speed of any footprint point under `cmd`.
double ReachRate(const Footprint& fp, const VelocityCommand& cmd);

// Rate of the arc-length measure reported by MaxFreeArc: |v| for translating
// commands, circumscribed radius * |omega| for in-place rotations.
double ArcRate(const Footprint& fp, const VelocityCommand& cmd);

// Body-frame poses along `cmd` held for `duration`, spaced so that no
// footprint point moves more than `ds` between consecutive samples. The grid
// samples sit at reach-parameter n * ds; when `include_end` is set the exact
// endpoint is appended if it is not already on the grid.
struct SweepSample {
  Pose2 pose;
  double time = 0.0;
};
std::vector<SweepSample> SweepSamples(const Footprint& fp,
                                      const VelocityCommand& cmd,
                                      double duration, double ds,
                                      bool include_end = true);

// Index of the first colliding swept sample when executing `cmd` from `pose`
// for `duration`, or nullopt if every sample is free.
std::optional<std::size_t> FirstSweptCollision(const Footprint& fp,
                                               const Pose2& pose,
                                               const VelocityCommand& cmd,
                                               double duration,
                                               const ObstacleSet& obs,
                                               double ds);

// Brute-force free arc length along `cmd` from `pose`, capped at `s_max`.
// Returns 0 when the start pose or the first increment collides.
double MaxFreeArc(const Footprint& fp, const Pose2& pose,
                  const VelocityCommand& cmd, const ObstacleSet& obs,
                  double s_max, double ds = 0.005);

// Same search expressed as a hold duration in seconds. Scaling the command
// by k divides the result by k.
double MaxFreeDuration(const Footprint& fp, const Pose2& pose,
                       const VelocityCommand& cmd, const ObstacleSet& obs,
                       double t_max, double ds = 0.005);

// Signed area (positive for counter-clockwise order).
double SignedArea(std::span<const Vec2> vertices);

}  // namespace escape
