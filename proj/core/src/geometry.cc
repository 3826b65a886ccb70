#include "escape/geometry.h"

#include <algorithm>
#include <limits>

#include "escape/errors.h"

namespace escape {
namespace {

int Orientation(Vec2 a, Vec2 b, Vec2 c) {
  const double v = (b - a).Cross(c - a);
  return (v > 0.0) - (v < 0.0);
}

bool OnSegment(Vec2 p, Vec2 a, Vec2 b) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
         std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

// Closed segment intersection.
bool SegmentsIntersect(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
  const int o1 = Orientation(p1, p2, q1);
  const int o2 = Orientation(p1, p2, q2);
  const int o3 = Orientation(q1, q2, p1);
  const int o4 = Orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && OnSegment(q1, p1, p2)) return true;
  if (o2 == 0 && OnSegment(q2, p1, p2)) return true;
  if (o3 == 0 && OnSegment(p1, q1, q2)) return true;
  if (o4 == 0 && OnSegment(p2, q1, q2)) return true;
  return false;
}

bool HasSelfIntersection(const std::vector<Vec2>& v) {
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = v[i];
    const Vec2 b = v[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      // Adjacent edges share a vertex by construction.
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (SegmentsIntersect(a, b, v[j], v[(j + 1) % n])) return true;
    }
  }
  return false;
}

std::vector<Vec2> ClipConvex(const std::vector<Vec2>& subject,
                             const std::vector<Vec2>& clip) {
  std::vector<Vec2> output = subject;
  const std::size_t m = clip.size();
  for (std::size_t e = 0; e < m && !output.empty(); ++e) {
    const Vec2 a = clip[e];
    const Vec2 b = clip[(e + 1) % m];
    const Vec2 edge = b - a;
    std::vector<Vec2> input;
    input.swap(output);
    for (std::size_t i = 0; i < input.size(); ++i) {
      const Vec2 p = input[i];
      const Vec2 q = input[(i + 1) % input.size()];
      const double dp = edge.Cross(p - a);
      const double dq = edge.Cross(q - a);
      if (dp >= 0.0) output.push_back(p);
      if ((dp >= 0.0) != (dq >= 0.0)) {
        const double t = dp / (dp - dq);
        output.push_back(p + (q - p) * t);
      }
    }
  }
  return output;
}

Box SweepBounds(const Footprint& fp, const Pose2& pose,
                const VelocityCommand& cmd, double duration) {
  const double reach =
      fp.CircumscribedRadius() + std::abs(cmd.v) * duration + 1e-9;
  return {pose.x - reach, pose.y - reach, pose.x + reach, pose.y + reach};
}

ObstacleSet NearbyObstacles(const ObstacleSet& obs, const Box& region) {
  ObstacleSet nearby;
  nearby.bounds = obs.bounds;
  for (const Polygon& p : obs.polygons) {
    if (p.bounds().Overlaps(region)) nearby.polygons.push_back(p);
  }
  return nearby;
}

}  // namespace

double SignedArea(std::span<const Vec2> vertices) {
  double twice = 0.0;
  const std::size_t n = vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    twice += vertices[i].Cross(vertices[(i + 1) % n]);
  }
  return 0.5 * twice;
}

Polygon::Polygon(std::vector<Vec2> vertices) : vertices_(std::move(vertices)) {
  if (vertices_.size() < 3) {
    throw InvalidArgument("polygon needs at least 3 vertices");
  }
  for (const Vec2& v : vertices_) {
    if (!std::isfinite(v.x) || !std::isfinite(v.y)) {
      throw InvalidArgument("polygon vertex is not finite");
    }
  }
  const double area = SignedArea(vertices_);
  if (area == 0.0) throw InvalidArgument("polygon has zero area");
  if (area < 0.0) std::reverse(vertices_.begin(), vertices_.end());
  if (HasSelfIntersection(vertices_)) {
    throw InvalidArgument("polygon is not simple");
  }
  ComputeBounds();
}

Polygon Polygon::FromConvexCcw(std::vector<Vec2> vertices) {
  Polygon p;
  p.vertices_ = std::move(vertices);
  p.ComputeBounds();
  return p;
}

Polygon Polygon::Rectangle(Vec2 center, double half_x, double half_y,
                           double angle) {
  if (!(half_x > 0.0) || !(half_y > 0.0)) {
    throw InvalidArgument("rectangle half extents must be positive");
  }
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const Vec2 ax{c * half_x, s * half_x};
  const Vec2 ay{-s * half_y, c * half_y};
  return FromConvexCcw({center - ax - ay, center + ax - ay, center + ax + ay,
                        center - ax + ay});
}

void Polygon::ComputeBounds() {
  bounds_ = {std::numeric_limits<double>::infinity(),
             std::numeric_limits<double>::infinity(),
             -std::numeric_limits<double>::infinity(),
             -std::numeric_limits<double>::infinity()};
  for (const Vec2& v : vertices_) {
    bounds_.min_x = std::min(bounds_.min_x, v.x);
    bounds_.min_y = std::min(bounds_.min_y, v.y);
    bounds_.max_x = std::max(bounds_.max_x, v.x);
    bounds_.max_y = std::max(bounds_.max_y, v.y);
  }
}

double Polygon::Area() const { return SignedArea(vertices_); }

bool Polygon::IsConvex() const {
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (Orientation(vertices_[i], vertices_[(i + 1) % n],
                    vertices_[(i + 2) % n]) < 0) {
      return false;
    }
  }
  return true;
}

bool Polygon::Contains(Vec2 p) const {
  if (!bounds_.Contains(p)) return false;
  bool inside = false;
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = vertices_[j];
    const Vec2 b = vertices_[i];
    if (Orientation(a, b, p) == 0 && OnSegment(p, a, b)) return true;
    if ((b.y > p.y) != (a.y > p.y)) {
      const double x_cross = b.x + (p.y - b.y) * (a.x - b.x) / (a.y - b.y);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

Polygon FootprintAt(const Footprint& fp, const Pose2& pose) {
  return Polygon::Rectangle({pose.x, pose.y}, fp.half_length, fp.half_width,
                            pose.theta);
}

bool Intersects(const Polygon& a, const Polygon& b) {
  if (!a.bounds().Overlaps(b.bounds())) return false;
  const auto& va = a.vertices();
  const auto& vb = b.vertices();
  for (std::size_t i = 0; i < va.size(); ++i) {
    const Vec2 p1 = va[i];
    const Vec2 p2 = va[(i + 1) % va.size()];
    for (std::size_t j = 0; j < vb.size(); ++j) {
      if (SegmentsIntersect(p1, p2, vb[j], vb[(j + 1) % vb.size()])) {
        return true;
      }
    }
  }
  return b.Contains(va.front()) || a.Contains(vb.front());
}

double DistanceToSegment(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = ab.Dot(ab);
  double t = len2 > 0.0 ? (p - a).Dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + ab * t)).Norm();
}

double Distance(const Polygon& poly, Vec2 p) {
  if (poly.Contains(p)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  const auto& v = poly.vertices();
  for (std::size_t i = 0; i < v.size(); ++i) {
    best = std::min(best, DistanceToSegment(p, v[i], v[(i + 1) % v.size()]));
  }
  return best;
}

double Distance(const Polygon& a, const Polygon& b) {
  if (Intersects(a, b)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  const auto& va = a.vertices();
  const auto& vb = b.vertices();
  for (std::size_t i = 0; i < va.size(); ++i) {
    for (std::size_t j = 0; j < vb.size(); ++j) {
      best = std::min(best,
                      DistanceToSegment(va[i], vb[j], vb[(j + 1) % vb.size()]));
      best = std::min(best,
                      DistanceToSegment(vb[j], va[i], va[(i + 1) % va.size()]));
    }
  }
  return best;
}

double IntersectionArea(const Polygon& a, const Polygon& b) {
  if (!a.IsConvex() || !b.IsConvex()) {
    throw InvalidArgument("intersection area requires convex polygons");
  }
  if (!a.bounds().Overlaps(b.bounds())) return 0.0;
  const std::vector<Vec2> clipped = ClipConvex(a.vertices(), b.vertices());
  if (clipped.size() < 3) return 0.0;
  return std::max(0.0, SignedArea(clipped));
}

double Iou(const Polygon& a, const Polygon& b) {
  const double inter = IntersectionArea(a, b);
  const double uni = a.Area() + b.Area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

bool Collides(const Polygon& body, const ObstacleSet& obs) {
  if (obs.bounds) {
    const Box& arena = *obs.bounds;
    for (const Vec2& v : body.vertices()) {
      if (!(v.x > arena.min_x && v.x < arena.max_x && v.y > arena.min_y &&
            v.y < arena.max_y)) {
        return true;
      }
    }
  }
  for (const Polygon& p : obs.polygons) {
    if (Intersects(body, p)) return true;
  }
  return false;
}

bool Collides(const Footprint& fp, const Pose2& pose, const ObstacleSet& obs) {
  return Collides(FootprintAt(fp, pose), obs);
}

double ReachRate(const Footprint& fp, const VelocityCommand& cmd) {
  return std::abs(cmd.v) + std::abs(cmd.omega) * fp.CircumscribedRadius();
}

double ArcRate(const Footprint& fp, const VelocityCommand& cmd) {
  if (cmd.v != 0.0) return std::abs(cmd.v);
  return std::abs(cmd.omega) * fp.CircumscribedRadius();
}

std::vector<SweepSample> SweepSamples(const Footprint& fp,
                                      const VelocityCommand& cmd,
                                      double duration, double ds,
                                      bool include_end) {
  if (!(ds > 0.0)) throw InvalidArgument("sampling step must be positive");
  std::vector<SweepSample> samples;
  const double reach = ReachRate(fp, cmd);
  if (reach == 0.0 || duration <= 0.0) {
    samples.push_back({Pose2{}, 0.0});
    return samples;
  }
  const double lambda_end = reach * duration;
  for (long n = 0;; ++n) {
    const double lambda = static_cast<double>(n) * ds;
    if (lambda > lambda_end) break;
    const double t = lambda / reach;
    samples.push_back({IntegrateArc(Pose2{}, cmd, t), t});
  }
  if (include_end && samples.back().time < duration) {
    samples.push_back({IntegrateArc(Pose2{}, cmd, duration), duration});
  }
  return samples;
}

std::optional<std::size_t> FirstSweptCollision(const Footprint& fp,
                                               const Pose2& pose,
                                               const VelocityCommand& cmd,
                                               double duration,
                                               const ObstacleSet& obs,
                                               double ds) {
  const ObstacleSet nearby =
      NearbyObstacles(obs, SweepBounds(fp, pose, cmd, duration));
  const std::vector<SweepSample> samples =
      SweepSamples(fp, cmd, duration, ds, true);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (Collides(fp, Compose(pose, samples[i].pose), nearby)) return i;
  }
  return std::nullopt;
}

double MaxFreeDuration(const Footprint& fp, const Pose2& pose,
                       const VelocityCommand& cmd, const ObstacleSet& obs,
                       double t_max, double ds) {
  if (!(t_max > 0.0)) throw InvalidArgument("t_max must be positive");
  if (ReachRate(fp, cmd) == 0.0) {
    return Collides(fp, pose, obs) ? 0.0 : t_max;
  }
  const ObstacleSet nearby =
      NearbyObstacles(obs, SweepBounds(fp, pose, cmd, t_max));
  const std::vector<SweepSample> samples =
      SweepSamples(fp, cmd, t_max, ds, true);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (Collides(fp, Compose(pose, samples[i].pose), nearby)) {
      return i == 0 ? 0.0 : samples[i - 1].time;
    }
  }
  return t_max;
}

double MaxFreeArc(const Footprint& fp, const Pose2& pose,
                  const VelocityCommand& cmd, const ObstacleSet& obs,
                  double s_max, double ds) {
  if (!(s_max > 0.0)) throw InvalidArgument("s_max must be positive");
  const double rate = ArcRate(fp, cmd);
  if (rate == 0.0) return Collides(fp, pose, obs) ? 0.0 : s_max;
  const double t_max = s_max / rate;
  const double t_free = MaxFreeDuration(fp, pose, cmd, obs, t_max, ds);
  return t_free == t_max ? s_max : rate * t_free;
}

}  // namespace escape
