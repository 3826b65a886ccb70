#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "escape/geometry.h"
#include "escape/kinematics.h"

namespace escape {

struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  // `walled`: everything outside the grid counts as occupied during
  // inflation (the arena wall).
  OccupancyGrid(Vec2 origin, double resolution, int width, int height,
                bool walled = false);

  Vec2 origin() const { return origin_; }
  double resolution() const { return resolution_; }
  int width() const { return width_; }
  int height() const { return height_; }
  bool walled() const { return walled_; }

  bool InBounds(Cell c) const {
    return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_;
  }
  bool Occupied(Cell c) const { return cells_[Index(c)] != 0; }
  void Set(Cell c, bool occupied) { cells_[Index(c)] = occupied ? 1 : 0; }
  std::size_t OccupiedCount() const;

  Vec2 CenterOf(Cell c) const;
  Box BoxOf(Cell c) const;
  // Cell containing p; points on the far edge map to the last cell.
  std::optional<Cell> CellAt(Vec2 p) const;

  friend bool operator==(const OccupancyGrid&, const OccupancyGrid&) = default;

 private:
  std::size_t Index(Cell c) const {
    return static_cast<std::size_t>(c.y) * width_ + c.x;
  }

  Vec2 origin_;
  double resolution_ = 0.02;
  int width_ = 0;
  int height_ = 0;
  bool walled_ = false;
  std::vector<std::uint8_t> cells_;
};

// Covers the arena when the obstacle set has one, otherwise the obstacles
// plus `extra` points padded by 1 m. Any cell whose interior overlaps an
// obstacle is occupied.
OccupancyGrid Rasterize(const ObstacleSet& obs, double resolution,
                        std::span<const Vec2> extra = {});

enum class InflationMetric {
  // Cells whose centers lie within the radius of an occupied cell center.
  kCellCenter,
  // Cells whose closest point lies within the radius of an occupied cell.
  // Every point of a free cell is then at least `radius` from obstacles.
  kCellBoundary,
};

OccupancyGrid Inflate(const OccupancyGrid& grid, double radius,
                      InflationMetric metric = InflationMetric::kCellCenter);

struct GridPath {
  std::vector<Cell> cells;
  std::vector<Vec2> world_points;
  // Octile length in meters.
  double cost = 0.0;
};

enum class SearchStatus {
  kFound,
  kNoPath,
  kStartOccupied,
  kGoalOccupied,
};

struct SearchResult {
  SearchStatus status = SearchStatus::kNoPath;
  GridPath path;
  bool found() const { return status == SearchStatus::kFound; }
};

// 8-connected A* with the octile heuristic. Throws InvalidArgument when
// start or goal is outside the grid.
SearchResult AStar(const OccupancyGrid& grid, Cell start, Cell goal);

struct RtrPrimitive {
  enum class Kind { kRotate, kTranslate };
  Kind kind = Kind::kRotate;
  // Signed rotation (rad) or translation length (m).
  double amount = 0.0;
  // Absolute heading held during a translation or reached by a rotation.
  double heading = 0.0;
  Vec2 from;
  Vec2 to;
};

struct RtrPlan {
  std::vector<RtrPrimitive> primitives;
  std::size_t cursor = 0;

  bool Exhausted() const { return cursor >= primitives.size(); }
};

// Collinear runs of [start, path points..., goal] become one Translate;
// a Rotate precedes every Translate and a final Rotate reaches the goal
// heading. Throws InvalidArgument for an empty path.
RtrPlan PathToRtr(const GridPath& path, const Pose2& start, const Pose2& goal);

// Pops primitives already completed at `pose`.
void AdvancePlan(RtrPlan& plan, const Pose2& pose);

// Command for the next control step toward the current primitive. Throws
// StateError when the plan is exhausted.
VelocityCommand NextGuidanceAction(RtrPlan& plan, const Pose2& pose,
                                   const MotionLimits& limits);

// Distance from every cell (as a closed box) to the nearest obstacle or
// arena wall, capped at `cap`. Thresholding it at r gives an inflated grid
// whose free cells are entirely at least r from every obstacle.
class ClearanceField {
 public:
  ClearanceField(const ObstacleSet& obs, double resolution, double cap,
                 std::span<const Vec2> extra = {});

  const OccupancyGrid& frame() const { return frame_; }
  double cap() const { return cap_; }
  double at(Cell c) const {
    return clearance_[static_cast<std::size_t>(c.y) * frame_.width() + c.x];
  }
  // Occupied iff the cell touches an obstacle or lies closer than `radius`.
  // Throws InvalidArgument for radius above the cap.
  OccupancyGrid Threshold(double radius) const;

 private:
  OccupancyGrid frame_;
  double cap_;
  std::vector<double> clearance_;
};

struct PlannerOptions {
  double resolution = 0.02;
  // Largest inflation the planner can be asked for.
  double max_inflation = 0.5;
};

struct GuidancePlan {
  SearchStatus status = SearchStatus::kNoPath;
  GridPath path;
  RtrPlan rtr;
  bool found() const { return status == SearchStatus::kFound; }
};

// Builds the clearance field once and caches one inflated grid per radius.
class GuidancePlanner {
 public:
  GuidancePlanner(const ObstacleSet& obs, PlannerOptions options = {},
                  std::span<const Vec2> extra = {});

  GuidancePlan Plan(const Pose2& start, const Pose2& goal, double inflation);
  const ClearanceField& clearance() const { return clearance_; }
  const OccupancyGrid& Inflated(double inflation);

 private:
  ClearanceField clearance_;
  std::map<double, OccupancyGrid> inflated_;
};

GuidancePlan PlanGuidance(const ObstacleSet& obs, const Pose2& start,
                          const Pose2& goal, double inflation,
                          const PlannerOptions& options = {});

struct Scenario;
bool Feasibility(const Scenario& scenario, double inflation,
                 const PlannerOptions& options = {});

}  // namespace escape
