#include "escape/grid_planner.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>

#include "escape/errors.h"
#include "escape/scenario.h"

namespace escape {
namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kDone = 1e-9;

constexpr int kDx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
constexpr int kDy[8] = {0, 0, 1, -1, 1, -1, 1, -1};

double Octile(Cell a, Cell b) {
  const int dx = std::abs(a.x - b.x);
  const int dy = std::abs(a.y - b.y);
  return (kSqrt2 - 1.0) * std::min(dx, dy) + std::max(dx, dy);
}

// Area of the part of `poly` inside an axis-aligned box (clipping works for
// any simple subject polygon against a convex window).
double ClippedArea(const Polygon& poly, const Box& box) {
  std::vector<Vec2> pts(poly.vertices().begin(), poly.vertices().end());
  std::vector<Vec2> next;
  auto clip = [&](auto inside, auto cross) {
    next.clear();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const Vec2 a = pts[i];
      const Vec2 b = pts[(i + 1) % pts.size()];
      const bool ia = inside(a);
      const bool ib = inside(b);
      if (ia) next.push_back(a);
      if (ia != ib) next.push_back(cross(a, b));
    }
    pts.swap(next);
  };
  auto at_x = [](double x) {
    return [x](Vec2 a, Vec2 b) {
      const double t = (x - a.x) / (b.x - a.x);
      return Vec2{x, a.y + t * (b.y - a.y)};
    };
  };
  auto at_y = [](double y) {
    return [y](Vec2 a, Vec2 b) {
      const double t = (y - a.y) / (b.y - a.y);
      return Vec2{a.x + t * (b.x - a.x), y};
    };
  };
  clip([&](Vec2 p) { return p.x >= box.min_x; }, at_x(box.min_x));
  if (pts.empty()) return 0.0;
  clip([&](Vec2 p) { return p.x <= box.max_x; }, at_x(box.max_x));
  if (pts.empty()) return 0.0;
  clip([&](Vec2 p) { return p.y >= box.min_y; }, at_y(box.min_y));
  if (pts.empty()) return 0.0;
  clip([&](Vec2 p) { return p.y <= box.max_y; }, at_y(box.max_y));
  if (pts.size() < 3) return 0.0;
  return std::abs(SignedArea(pts));
}

}  // namespace

OccupancyGrid::OccupancyGrid(Vec2 origin, double resolution, int width,
                             int height, bool walled)
    : origin_(origin),
      resolution_(resolution),
      width_(width),
      height_(height),
      walled_(walled) {
  if (!(resolution > 0.0) || width <= 0 || height <= 0) {
    throw InvalidArgument("occupancy grid needs positive size and resolution");
  }
  cells_.assign(static_cast<std::size_t>(width) * height, 0);
}

std::size_t OccupancyGrid::OccupiedCount() const {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), 1));
}

Vec2 OccupancyGrid::CenterOf(Cell c) const {
  return {origin_.x + (c.x + 0.5) * resolution_,
          origin_.y + (c.y + 0.5) * resolution_};
}

Box OccupancyGrid::BoxOf(Cell c) const {
  return {origin_.x + c.x * resolution_, origin_.y + c.y * resolution_,
          origin_.x + (c.x + 1) * resolution_,
          origin_.y + (c.y + 1) * resolution_};
}

std::optional<Cell> OccupancyGrid::CellAt(Vec2 p) const {
  const double fx = (p.x - origin_.x) / resolution_;
  const double fy = (p.y - origin_.y) / resolution_;
  if (!(fx >= 0.0 && fy >= 0.0 && fx <= width_ && fy <= height_)) {
    return std::nullopt;
  }
  return Cell{std::min(static_cast<int>(fx), width_ - 1),
              std::min(static_cast<int>(fy), height_ - 1)};
}

namespace {

OccupancyGrid EmptyFrame(const ObstacleSet& obs, double resolution,
                         std::span<const Vec2> extra) {
  if (!(resolution > 0.0)) throw InvalidArgument("resolution must be positive");
  Box extent;
  bool walled = false;
  if (obs.bounds) {
    extent = *obs.bounds;
    walled = true;
  } else {
    extent = {0.0, 0.0, 0.0, 0.0};
    bool first = true;
    auto grow = [&](const Box& b) {
      if (first) {
        extent = b;
        first = false;
        return;
      }
      extent.min_x = std::min(extent.min_x, b.min_x);
      extent.min_y = std::min(extent.min_y, b.min_y);
      extent.max_x = std::max(extent.max_x, b.max_x);
      extent.max_y = std::max(extent.max_y, b.max_y);
    };
    for (const Polygon& p : obs.polygons) grow(p.bounds());
    for (const Vec2& v : extra) grow({v.x, v.y, v.x, v.y});
    extent = {extent.min_x - 1.0, extent.min_y - 1.0, extent.max_x + 1.0,
              extent.max_y + 1.0};
  }
  const int width = std::max(1, static_cast<int>(std::ceil(
                                    extent.Width() / resolution - 1e-9)));
  const int height = std::max(1, static_cast<int>(std::ceil(
                                     extent.Height() / resolution - 1e-9)));
  return OccupancyGrid({extent.min_x, extent.min_y}, resolution, width,
                       height, walled);
}

}  // namespace

OccupancyGrid Rasterize(const ObstacleSet& obs, double resolution,
                        std::span<const Vec2> extra) {
  OccupancyGrid grid = EmptyFrame(obs, resolution, extra);
  const Vec2 origin = grid.origin();
  const int width = grid.width();
  const int height = grid.height();
  for (const Polygon& poly : obs.polygons) {
    const Box b = poly.bounds();
    const int x0 = std::max(0, static_cast<int>(std::floor((b.min_x - origin.x) / resolution)));
    const int y0 = std::max(0, static_cast<int>(std::floor((b.min_y - origin.y) / resolution)));
    const int x1 = std::min(width - 1, static_cast<int>(std::floor((b.max_x - origin.x) / resolution)));
    const int y1 = std::min(height - 1, static_cast<int>(std::floor((b.max_y - origin.y) / resolution)));
    const double min_area = 1e-12 * resolution * resolution;
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const Cell c{x, y};
        if (grid.Occupied(c)) continue;
        if (ClippedArea(poly, grid.BoxOf(c)) > min_area) grid.Set(c, true);
      }
    }
  }
  return grid;
}

OccupancyGrid Inflate(const OccupancyGrid& grid, double radius,
                      InflationMetric metric) {
  if (!(radius >= 0.0)) throw InvalidArgument("inflation radius must be >= 0");
  const double res = grid.resolution();
  const int reach = static_cast<int>(std::ceil(radius / res)) + 1;
  std::vector<Cell> offsets;
  for (int dy = -reach; dy <= reach; ++dy) {
    for (int dx = -reach; dx <= reach; ++dx) {
      if (dx == 0 && dy == 0) continue;
      bool hit = false;
      if (metric == InflationMetric::kCellCenter) {
        hit = res * std::hypot(dx, dy) <= radius + 1e-12;
      } else {
        hit = res * std::hypot(std::max(0, std::abs(dx) - 1),
                               std::max(0, std::abs(dy) - 1)) <
              radius;
      }
      if (hit) offsets.push_back({dx, dy});
    }
  }
  OccupancyGrid out = grid;
  if (offsets.empty()) return out;
  const int w = grid.width();
  const int h = grid.height();
  auto source = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= w || y >= h) return grid.walled();
    return grid.Occupied({x, y});
  };
  auto stamp = [&](int x, int y) {
    for (const Cell& o : offsets) {
      const Cell t{x + o.x, y + o.y};
      if (out.InBounds(t)) out.Set(t, true);
    }
  };
  // Only occupied cells with a free neighbor can reach new cells.
  for (int y = -1; y <= h; ++y) {
    for (int x = -1; x <= w; ++x) {
      if (!source(x, y)) continue;
      const bool outside = x < 0 || y < 0 || x >= w || y >= h;
      if (outside && (x < -1 || y < -1 || x > w || y > h)) continue;
      bool frontier = false;
      for (int k = 0; k < 8 && !frontier; ++k) {
        const int nx = x + kDx[k];
        const int ny = y + kDy[k];
        if (nx >= 0 && ny >= 0 && nx < w && ny < h && !grid.Occupied({nx, ny})) {
          frontier = true;
        }
      }
      if (frontier) stamp(x, y);
    }
  }
  return out;
}

SearchResult AStar(const OccupancyGrid& grid, Cell start, Cell goal) {
  if (!grid.InBounds(start) || !grid.InBounds(goal)) {
    throw InvalidArgument("A* start or goal outside the grid");
  }
  SearchResult result;
  if (grid.Occupied(start)) {
    result.status = SearchStatus::kStartOccupied;
    return result;
  }
  if (grid.Occupied(goal)) {
    result.status = SearchStatus::kGoalOccupied;
    return result;
  }
  const int w = grid.width();
  const std::size_t n = static_cast<std::size_t>(w) * grid.height();
  auto id = [w](Cell c) { return static_cast<std::size_t>(c.y) * w + c.x; };
  std::vector<double> g(n, std::numeric_limits<double>::infinity());
  std::vector<std::int64_t> parent(n, -1);
  std::vector<std::uint8_t> closed(n, 0);

  struct Entry {
    double f;
    double h;
    std::size_t id;
    bool operator>(const Entry& o) const {
      if (f != o.f) return f > o.f;
      if (h != o.h) return h > o.h;
      return id > o.id;
    }
  };
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  g[id(start)] = 0.0;
  open.push({Octile(start, goal), Octile(start, goal), id(start)});
  const std::size_t goal_id = id(goal);
  while (!open.empty()) {
    const Entry e = open.top();
    open.pop();
    if (closed[e.id]) continue;
    closed[e.id] = 1;
    if (e.id == goal_id) break;
    const Cell c{static_cast<int>(e.id % w), static_cast<int>(e.id / w)};
    for (int k = 0; k < 8; ++k) {
      const Cell nb{c.x + kDx[k], c.y + kDy[k]};
      if (!grid.InBounds(nb) || grid.Occupied(nb)) continue;
      const std::size_t nid = id(nb);
      if (closed[nid]) continue;
      const double step = k < 4 ? 1.0 : kSqrt2;
      const double ng = g[e.id] + step;
      if (ng < g[nid]) {
        g[nid] = ng;
        parent[nid] = static_cast<std::int64_t>(e.id);
        const double h = Octile(nb, goal);
        open.push({ng + h, h, nid});
      }
    }
  }
  if (!closed[goal_id]) {
    result.status = SearchStatus::kNoPath;
    return result;
  }
  result.status = SearchStatus::kFound;
  for (std::int64_t cur = static_cast<std::int64_t>(goal_id); cur >= 0;
       cur = parent[cur]) {
    const Cell c{static_cast<int>(cur % w), static_cast<int>(cur / w)};
    result.path.cells.push_back(c);
  }
  std::reverse(result.path.cells.begin(), result.path.cells.end());
  for (const Cell& c : result.path.cells) {
    result.path.world_points.push_back(grid.CenterOf(c));
  }
  result.path.cost = g[goal_id] * grid.resolution();
  return result;
}

RtrPlan PathToRtr(const GridPath& path, const Pose2& start, const Pose2& goal) {
  if (path.world_points.empty()) {
    throw InvalidArgument("cannot convert an empty path");
  }
  std::vector<Vec2> pts;
  auto push = [&pts](Vec2 p) {
    if (!pts.empty() && (p - pts.back()).Norm() < 1e-12) return;
    pts.push_back(p);
  };
  push({start.x, start.y});
  for (const Vec2& p : path.world_points) push(p);
  push({goal.x, goal.y});

  // Keep only the corners.
  std::vector<Vec2> corners;
  for (const Vec2& p : pts) {
    while (corners.size() >= 2) {
      const Vec2 a = corners[corners.size() - 2];
      const Vec2 b = corners.back();
      const Vec2 ab = b - a;
      const Vec2 bp = p - b;
      const bool collinear =
          std::abs(ab.Cross(bp)) <= 1e-9 * ab.Norm() * bp.Norm() &&
          ab.Dot(bp) > 0.0;
      if (!collinear) break;
      corners.pop_back();
    }
    corners.push_back(p);
  }

  RtrPlan plan;
  double heading = start.theta;
  for (std::size_t i = 1; i < corners.size(); ++i) {
    const Vec2 d = corners[i] - corners[i - 1];
    const double dir = std::atan2(d.y, d.x);
    const double turn = NormalizeAngle(dir - heading);
    if (i == 1 || std::abs(turn) > 1e-12) {
      plan.primitives.push_back({RtrPrimitive::Kind::kRotate, turn, dir,
                                 corners[i - 1], corners[i - 1]});
    }
    plan.primitives.push_back({RtrPrimitive::Kind::kTranslate, d.Norm(), dir,
                               corners[i - 1], corners[i]});
    heading = dir;
  }
  const Vec2 end = corners.back();
  plan.primitives.push_back({RtrPrimitive::Kind::kRotate,
                             NormalizeAngle(goal.theta - heading), goal.theta,
                             end, end});
  return plan;
}

namespace {

double Remaining(const RtrPrimitive& p, const Pose2& pose) {
  if (p.kind == RtrPrimitive::Kind::kRotate) {
    return NormalizeAngle(p.heading - pose.theta);
  }
  const Vec2 dir{std::cos(p.heading), std::sin(p.heading)};
  return (p.to - Vec2{pose.x, pose.y}).Dot(dir);
}

}  // namespace

void AdvancePlan(RtrPlan& plan, const Pose2& pose) {
  while (!plan.Exhausted() &&
         std::abs(Remaining(plan.primitives[plan.cursor], pose)) < kDone) {
    ++plan.cursor;
  }
}

VelocityCommand NextGuidanceAction(RtrPlan& plan, const Pose2& pose,
                                   const MotionLimits& limits) {
  AdvancePlan(plan, pose);
  if (plan.Exhausted()) throw StateError("guidance plan exhausted");
  const RtrPrimitive& p = plan.primitives[plan.cursor];
  const double rest = Remaining(p, pose) / limits.dt;
  if (p.kind == RtrPrimitive::Kind::kRotate) {
    return {std::clamp(rest, -limits.omega_max, limits.omega_max), 0.0};
  }
  return {0.0, std::clamp(rest, -limits.v_max, limits.v_max)};
}

ClearanceField::ClearanceField(const ObstacleSet& obs, double resolution,
                               double cap, std::span<const Vec2> extra)
    : frame_(EmptyFrame(obs, resolution, extra)), cap_(cap) {
  if (!(cap >= 0.0)) throw InvalidArgument("clearance cap must be >= 0");
  const int w = frame_.width();
  const int h = frame_.height();
  clearance_.assign(static_cast<std::size_t>(w) * h, cap);
  if (frame_.walled()) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int rim = std::min({x, y, w - 1 - x, h - 1 - y});
        double& c = clearance_[static_cast<std::size_t>(y) * w + x];
        c = std::min(c, rim * resolution);
      }
    }
  }
  const Vec2 origin = frame_.origin();
  for (const Polygon& poly : obs.polygons) {
    const Box b = poly.bounds();
    const int x0 = std::max(0, static_cast<int>(std::floor((b.min_x - cap - origin.x) / resolution)));
    const int y0 = std::max(0, static_cast<int>(std::floor((b.min_y - cap - origin.y) / resolution)));
    const int x1 = std::min(w - 1, static_cast<int>(std::floor((b.max_x + cap - origin.x) / resolution)));
    const int y1 = std::min(h - 1, static_cast<int>(std::floor((b.max_y + cap - origin.y) / resolution)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        double& c = clearance_[static_cast<std::size_t>(y) * w + x];
        const Box cell = frame_.BoxOf({x, y});
        const double gap_x = std::max({0.0, b.min_x - cell.max_x, cell.min_x - b.max_x});
        const double gap_y = std::max({0.0, b.min_y - cell.max_y, cell.min_y - b.max_y});
        if (std::hypot(gap_x, gap_y) >= c) continue;
        const Polygon square = Polygon::FromConvexCcw(
            {{cell.min_x, cell.min_y}, {cell.max_x, cell.min_y},
             {cell.max_x, cell.max_y}, {cell.min_x, cell.max_y}});
        c = std::min(c, Distance(square, poly));
      }
    }
  }
}

OccupancyGrid ClearanceField::Threshold(double radius) const {
  if (!(radius >= 0.0) || radius > cap_) {
    throw InvalidArgument("inflation radius outside [0, cap]");
  }
  OccupancyGrid grid = frame_;
  for (int y = 0; y < grid.height(); ++y) {
    for (int x = 0; x < grid.width(); ++x) {
      const double c = at({x, y});
      grid.Set({x, y}, c <= 0.0 || c < radius);
    }
  }
  return grid;
}

GuidancePlanner::GuidancePlanner(const ObstacleSet& obs, PlannerOptions options,
                                 std::span<const Vec2> extra)
    : clearance_(obs, options.resolution, options.max_inflation, extra) {}

const OccupancyGrid& GuidancePlanner::Inflated(double inflation) {
  auto it = inflated_.find(inflation);
  if (it == inflated_.end()) {
    it = inflated_.emplace(inflation, clearance_.Threshold(inflation)).first;
  }
  return it->second;
}

GuidancePlan GuidancePlanner::Plan(const Pose2& start, const Pose2& goal,
                                   double inflation) {
  const OccupancyGrid& grid = Inflated(inflation);
  GuidancePlan plan;
  const std::optional<Cell> s = grid.CellAt({start.x, start.y});
  const std::optional<Cell> g = grid.CellAt({goal.x, goal.y});
  if (!s) {
    plan.status = SearchStatus::kStartOccupied;
    return plan;
  }
  if (!g) {
    plan.status = SearchStatus::kGoalOccupied;
    return plan;
  }
  SearchResult r = AStar(grid, *s, *g);
  plan.status = r.status;
  if (r.found()) {
    plan.path = std::move(r.path);
    plan.rtr = PathToRtr(plan.path, start, goal);
  }
  return plan;
}

GuidancePlan PlanGuidance(const ObstacleSet& obs, const Pose2& start,
                          const Pose2& goal, double inflation,
                          const PlannerOptions& options) {
  const Vec2 extra[] = {{start.x, start.y}, {goal.x, goal.y}};
  GuidancePlanner planner(obs, options, extra);
  return planner.Plan(start, goal, inflation);
}

bool Feasibility(const Scenario& scenario, double inflation,
                 const PlannerOptions& options) {
  return PlanGuidance(scenario.obstacles, scenario.start, scenario.goal,
                      inflation, options)
      .found();
}

}  // namespace escape
