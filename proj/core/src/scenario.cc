#include "escape/scenario.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace escape {
namespace {

// Extra envelope padding covering footprint motion between the 2 cm
// generation samples.
constexpr double kGenerationDs = 0.02;
constexpr double kEnvelopePad = 0.012;
constexpr double kExitApproach = 0.45;
constexpr double kWallThickness = 0.12;

std::uint64_t SplitMix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double Uniform(std::mt19937_64& rng, double lo, double hi) {
  if (lo == hi) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double Uniform(std::mt19937_64& rng, const Range& r) {
  return Uniform(rng, r.lo, r.hi);
}

double DistanceToArenaWall(const Box& arena, Vec2 p) {
  return std::min({p.x - arena.min_x, arena.max_x - p.x, p.y - arena.min_y,
                   arena.max_y - p.y});
}

bool StrictlyInside(const Box& box, const Polygon& poly) {
  for (const Vec2& v : poly.vertices()) {
    if (!(v.x > box.min_x && v.x < box.max_x && v.y > box.min_y &&
          v.y < box.max_y)) {
      return false;
    }
  }
  return true;
}

struct Rect {
  Vec2 center;
  double half_x = 0.0;
  double half_y = 0.0;
  double angle = 0.0;

  Polygon ToPolygon() const {
    return Polygon::Rectangle(center, half_x, half_y, angle);
  }
  double Circumradius() const { return std::hypot(half_x, half_y); }
};

struct Walk {
  std::vector<Pose2> poses;
  std::vector<Pose2> dense;
};

class Builder {
 public:
  Builder(const GeneratorConfig& config, std::mt19937_64& rng)
      : config_(config),
        rng_(rng),
        actions_(BuildActionSpace(config.limits)),
        circumradius_(config.footprint.CircumscribedRadius()) {}

  std::optional<Scenario> Attempt() {
    const double clearance = Uniform(rng_, config_.clearance);
    protect_ = clearance + kEnvelopePad;
    const bool with_exit = config_.exit_width.has_value();
    const double target = Uniform(rng_, config_.path_length);

    std::optional<Walk> walk = RandomWalk(target, with_exit);
    if (!walk) return std::nullopt;
    walk_ = std::move(*walk);
    envelope_.clear();
    for (const Pose2& p : walk_.dense) {
      envelope_.push_back(FootprintAt(config_.footprint, p));
    }

    obstacles_.clear();
    if (with_exit && !PlaceDoorway(Uniform(rng_, *config_.exit_width))) {
      return std::nullopt;
    }
    PlaceObstacles();
    if (config_.sparse_gaps) AddSparseGaps();

    Scenario s;
    s.obstacles.bounds = config_.arena;
    for (const Rect& r : obstacles_) s.obstacles.polygons.push_back(r.ToPolygon());
    s.start = walk_.poses.front();
    s.goal = walk_.poses.back();
    s.witness_path = walk_.poses;
    for (const Pose2& p : s.witness_path) {
      if (Collides(config_.footprint, p, s.obstacles)) return std::nullopt;
    }
    s.features = TagFeatures(
        MeasureFeatures(s, config_.footprint, config_.thresholds),
        config_.footprint, config_.thresholds);
    return s;
  }

 private:
  bool InsideWalkArea(const Pose2& pose) const {
    const double m = protect_ + 0.02;
    const Box inner{config_.arena.min_x + m, config_.arena.min_y + m,
                    config_.arena.max_x - m, config_.arena.max_y - m};
    return StrictlyInside(inner, FootprintAt(config_.footprint, pose));
  }

  const DiscreteAction& SampleAction() {
    if (Uniform(rng_, 0.0, 1.0) < 0.12) {
      return actions_[Uniform(rng_, 0.0, 1.0) < 0.5 ? 0 : 1];
    }
    // Gentle turns dominate so the walk makes progress.
    static constexpr double kRadiusWeights[kRadiusCount] = {1, 1, 1, 2, 2,
                                                             3, 4, 5, 5, 4};
    std::discrete_distribution<int> radius(std::begin(kRadiusWeights),
                                           std::end(kRadiusWeights));
    const int i = radius(rng_);
    const bool reverse = Uniform(rng_, 0.0, 1.0) < 0.1;
    const bool right = Uniform(rng_, 0.0, 1.0) < 0.5;
    const int sign = (reverse ? 2 : 0) + (right ? 1 : 0);
    return actions_[2 + 4 * i + sign];
  }

  // Advances one control step if every swept sample stays inside the walk
  // area.
  bool TryStep(Walk& walk, const VelocityCommand& cmd) {
    const Pose2 from = walk.poses.back();
    const auto samples = SweepSamples(config_.footprint, cmd,
                                      config_.limits.dt, kGenerationDs, true);
    std::vector<Pose2> world;
    world.reserve(samples.size());
    for (std::size_t i = 1; i < samples.size(); ++i) {
      const Pose2 p = Compose(from, samples[i].pose);
      if (!InsideWalkArea(p)) return false;
      world.push_back(p);
    }
    walk.dense.insert(walk.dense.end(), world.begin(), world.end());
    walk.poses.push_back(IntegrateArc(from, cmd, config_.limits.dt));
    return true;
  }

  std::optional<Walk> RandomWalk(double target, bool with_exit) {
    const Box& a = config_.arena;
    const double mx = std::min(1.2, 0.4 * a.Width());
    const double my = std::min(1.2, 0.4 * a.Height());
    Pose2 start{Uniform(rng_, a.min_x + mx, a.max_x - mx),
                Uniform(rng_, a.min_y + my, a.max_y - my),
                Uniform(rng_, -std::numbers::pi, std::numbers::pi)};
    if (!InsideWalkArea(start)) return std::nullopt;
    Walk walk;
    walk.poses.push_back(start);
    walk.dense.push_back(start);

    const double goal_len = with_exit ? target - kExitApproach : target;
    double length = 0.0;
    int steps = 0;
    int blocked = 0;
    while (length < goal_len && steps < config_.max_walk_steps) {
      const DiscreteAction& action = SampleAction();
      const int hold = std::uniform_int_distribution<int>(2, 8)(rng_);
      for (int h = 0; h < hold && length < goal_len; ++h) {
        const Pose2 before = walk.poses.back();
        if (!TryStep(walk, action.command)) {
          if (++blocked > 60) return std::nullopt;
          break;
        }
        const Pose2 after = walk.poses.back();
        length += std::hypot(after.x - before.x, after.y - before.y);
        ++steps;
      }
    }
    if (length < goal_len) return std::nullopt;
    if (with_exit) {
      const VelocityCommand straight{0.0, config_.limits.v_max};
      double run = 0.0;
      while (run < kExitApproach) {
        if (!TryStep(walk, straight)) return std::nullopt;
        run += config_.limits.v_max * config_.limits.dt;
      }
    }
    return walk;
  }

  bool ClearOfEnvelope(const Polygon& poly, const Vec2& center,
                       double circumradius, double required) const {
    const double reach = circumradius_ + circumradius + required;
    for (std::size_t i = 0; i < walk_.dense.size(); ++i) {
      const Pose2& p = walk_.dense[i];
      if (std::hypot(p.x - center.x, p.y - center.y) > reach) continue;
      if (Distance(poly, envelope_[i]) < required) return false;
    }
    return true;
  }

  bool Admissible(const Rect& r) const {
    const Polygon poly = r.ToPolygon();
    if (!StrictlyInside(config_.arena, poly)) return false;
    if (!ClearOfEnvelope(poly, r.center, r.Circumradius(), protect_)) {
      return false;
    }
    if (!config_.sparse_gaps) {
      const Range& band = config_.thresholds.sparse_gap;
      for (const Rect& o : obstacles_) {
        const double gap_lower_bound =
            std::hypot(o.center.x - r.center.x, o.center.y - r.center.y) -
            o.Circumradius() - r.Circumradius();
        if (gap_lower_bound > band.hi) continue;
        const double g = Distance(poly, o.ToPolygon());
        if (g >= band.lo && g <= band.hi) return false;
      }
    }
    return true;
  }

  // Two walls flanking the final straight approach, inner faces
  // `half_opening` from the goal's center line.
  bool PlaceDoorway(double half_opening) {
    const Pose2 goal = walk_.poses.back();
    const Vec2 heading{std::cos(goal.theta), std::sin(goal.theta)};
    const Vec2 normal{-heading.y, heading.x};
    const Vec2 mid = Vec2{goal.x, goal.y} - heading * 0.1;
    for (double side : {1.0, -1.0}) {
      Rect wall{mid + normal * (side * (half_opening + kWallThickness / 2)),
                0.2, kWallThickness / 2, goal.theta};
      const Polygon poly = wall.ToPolygon();
      if (!StrictlyInside(config_.arena, poly)) return false;
      if (!ClearOfEnvelope(poly, wall.center, wall.Circumradius(), 0.002)) {
        return false;
      }
      obstacles_.push_back(wall);
    }
    return true;
  }

  Rect RandomRect(Vec2 center) {
    Rect r;
    r.center = center;
    r.half_x = 0.5 * Uniform(rng_, config_.obstacle_size);
    r.half_y = 0.5 * Uniform(rng_, config_.obstacle_size);
    r.angle = Uniform(rng_, 0.0, 1.0) < config_.rotated_fraction
                  ? Uniform(rng_, 0.0, std::numbers::pi)
                  : 0.0;
    return r;
  }

  // Pushes a rectangle outward from a walk sample until admissible, then
  // bisects back toward the walk so it hugs the envelope.
  std::optional<Rect> HuggingRect() {
    const std::size_t k = std::uniform_int_distribution<std::size_t>(
        0, walk_.dense.size() - 1)(rng_);
    const Vec2 anchor{walk_.dense[k].x, walk_.dense[k].y};
    const double alpha = Uniform(rng_, -std::numbers::pi, std::numbers::pi);
    const Vec2 dir{std::cos(alpha), std::sin(alpha)};
    Rect r = RandomRect(anchor);
    double bad = 0.0;
    double good = -1.0;
    double d = config_.footprint.InscribedRadius() + protect_ +
               std::min(r.half_x, r.half_y);
    for (int i = 0; i < 16; ++i, d += 0.03) {
      r.center = anchor + dir * d;
      if (Admissible(r)) {
        good = d;
        break;
      }
      bad = d;
    }
    if (good < 0.0) return std::nullopt;
    for (int i = 0; i < 5; ++i) {
      const double mid = 0.5 * (bad + good);
      r.center = anchor + dir * mid;
      if (Admissible(r)) {
        good = mid;
      } else {
        bad = mid;
      }
    }
    r.center = anchor + dir * good;
    return r;
  }

  void PlaceObstacles() {
    const int target = static_cast<int>(std::lround(
        Uniform(rng_, config_.obstacle_count.lo, config_.obstacle_count.hi)));
    const Box& a = config_.arena;
    for (int tries = 0; tries < config_.placement_tries &&
                        static_cast<int>(obstacles_.size()) < target;
         ++tries) {
      std::optional<Rect> r;
      if (Uniform(rng_, 0.0, 1.0) < 0.75) {
        r = HuggingRect();
      } else {
        Rect u = RandomRect({Uniform(rng_, a.min_x, a.max_x),
                             Uniform(rng_, a.min_y, a.max_y)});
        if (Admissible(u)) r = u;
      }
      if (r) obstacles_.push_back(*r);
    }
  }

  int CountBandGaps() const {
    const Range& band = config_.thresholds.sparse_gap;
    int count = 0;
    for (std::size_t i = 0; i < obstacles_.size(); ++i) {
      const Polygon pi = obstacles_[i].ToPolygon();
      for (std::size_t j = i + 1; j < obstacles_.size(); ++j) {
        const double g = Distance(pi, obstacles_[j].ToPolygon());
        if (g >= band.lo && g <= band.hi) ++count;
      }
    }
    return count;
  }

  // Places a rectangle parallel to an existing one, separated by a gap
  // inside the sparse band.
  void AddSparseGaps() {
    const Range& band = config_.thresholds.sparse_gap;
    int gaps = CountBandGaps();
    for (int tries = 0; tries < 300 && !obstacles_.empty() &&
                        gaps < config_.thresholds.sparse_min_gaps;
         ++tries) {
      const Rect& base = obstacles_[std::uniform_int_distribution<std::size_t>(
          0, obstacles_.size() - 1)(rng_)];
      Rect r = RandomRect(base.center);
      r.angle = base.angle;
      const double gap = Uniform(rng_, band.lo + 0.02, band.hi - 0.02);
      const int side = std::uniform_int_distribution<int>(0, 3)(rng_);
      const double c = std::cos(base.angle);
      const double s = std::sin(base.angle);
      const Vec2 ax{c, s};
      const Vec2 ay{-s, c};
      const double sign = side % 2 == 0 ? 1.0 : -1.0;
      if (side < 2) {
        r.center = base.center + ax * (sign * (base.half_x + gap + r.half_x));
      } else {
        r.center = base.center + ay * (sign * (base.half_y + gap + r.half_y));
      }
      if (!Admissible(r)) continue;
      obstacles_.push_back(r);
      gaps = CountBandGaps();
    }
  }

  const GeneratorConfig& config_;
  std::mt19937_64& rng_;
  DiscreteActionSet actions_;
  double circumradius_;
  double protect_ = 0.0;
  Walk walk_;
  std::vector<Polygon> envelope_;
  std::vector<Rect> obstacles_;
};

}  // namespace

std::string_view FeatureName(Feature f) {
  switch (f) {
    case Feature::kNarrowExit:
      return "NarrowExit";
    case Feature::kConstrainedSpace:
      return "ConstrainedSpace";
    case Feature::kSparseObstacles:
      return "SparseObstacles";
    case Feature::kLongCorridor:
      return "LongCorridor";
  }
  return "Unknown";
}

std::optional<Feature> ParseFeature(std::string_view name) {
  for (Feature f : {Feature::kNarrowExit, Feature::kConstrainedSpace,
                    Feature::kSparseObstacles, Feature::kLongCorridor}) {
    if (FeatureName(f) == name) return f;
  }
  return std::nullopt;
}

std::vector<Feature> FeatureSet::List() const {
  std::vector<Feature> out;
  for (Feature f : {Feature::kNarrowExit, Feature::kConstrainedSpace,
                    Feature::kSparseObstacles, Feature::kLongCorridor}) {
    if (Has(f)) out.push_back(f);
  }
  return out;
}

std::string FeatureSet::Label() const {
  if (Empty()) return "simple";
  std::string label;
  for (Feature f : List()) {
    if (!label.empty()) label += '+';
    label += FeatureName(f).front();
  }
  return label;
}

FeatureSet FeaturesOf(ScenarioClass c) {
  using enum Feature;
  switch (c) {
    case ScenarioClass::kNCSL:
      return {kNarrowExit, kConstrainedSpace, kSparseObstacles, kLongCorridor};
    case ScenarioClass::kNCS:
      return {kNarrowExit, kConstrainedSpace, kSparseObstacles};
    case ScenarioClass::kNC:
      return {kNarrowExit, kConstrainedSpace};
    case ScenarioClass::kN:
      return {kNarrowExit};
    case ScenarioClass::kSimple:
      return {};
  }
  return {};
}

FeatureMeasurements MeasureFeatures(const Scenario& scenario,
                                    const Footprint& fp,
                                    const FeatureThresholds& thresholds) {
  FeatureMeasurements m;
  m.min_center_clearance = std::numeric_limits<double>::infinity();
  m.min_contour_clearance = std::numeric_limits<double>::infinity();
  const ObstacleSet& obs = scenario.obstacles;
  for (const Pose2& pose : scenario.witness_path) {
    const Vec2 c{pose.x, pose.y};
    const Polygon body = FootprintAt(fp, pose);
    double center = std::numeric_limits<double>::infinity();
    double contour = std::numeric_limits<double>::infinity();
    if (obs.bounds) {
      center = DistanceToArenaWall(*obs.bounds, c);
      for (const Vec2& v : body.vertices()) {
        contour = std::min(contour, DistanceToArenaWall(*obs.bounds, v));
      }
    }
    for (const Polygon& p : obs.polygons) {
      center = std::min(center, Distance(p, c));
      contour = std::min(contour, Distance(body, p));
    }
    m.min_center_clearance = std::min(m.min_center_clearance, center);
    m.min_contour_clearance = std::min(m.min_contour_clearance, contour);
  }
  for (std::size_t i = 0; i < obs.polygons.size(); ++i) {
    for (std::size_t j = i + 1; j < obs.polygons.size(); ++j) {
      const double g = Distance(obs.polygons[i], obs.polygons[j]);
      if (g >= thresholds.sparse_gap.lo && g <= thresholds.sparse_gap.hi) {
        ++m.gaps_in_band;
      }
    }
  }
  for (std::size_t i = 1; i < scenario.witness_path.size(); ++i) {
    const Pose2& a = scenario.witness_path[i - 1];
    const Pose2& b = scenario.witness_path[i];
    m.path_length += std::hypot(b.x - a.x, b.y - a.y);
  }
  return m;
}

FeatureSet TagFeatures(const FeatureMeasurements& m, const Footprint& fp,
                       const FeatureThresholds& thresholds) {
  FeatureSet tags;
  if (m.min_center_clearance < fp.CircumscribedRadius()) {
    tags.Insert(Feature::kNarrowExit);
  }
  if (m.min_contour_clearance < thresholds.constrained_clearance) {
    tags.Insert(Feature::kConstrainedSpace);
  }
  if (m.gaps_in_band >= thresholds.sparse_min_gaps) {
    tags.Insert(Feature::kSparseObstacles);
  }
  if (m.path_length > thresholds.long_corridor_length) {
    tags.Insert(Feature::kLongCorridor);
  }
  return tags;
}

void GeneratorConfig::Validate() const {
  const auto check = [](bool ok, const char* what) {
    if (!ok) throw InvalidArgument(std::string("generator config: ") + what);
  };
  check(arena.max_x > arena.min_x && arena.max_y > arena.min_y,
        "arena must have positive size");
  check(limits.Valid(), "motion limits must be positive");
  check(path_length.Valid() && path_length.lo > 0.0, "path_length range");
  check(obstacle_count.Valid() && obstacle_count.lo >= 0.0,
        "obstacle_count range");
  check(obstacle_size.Valid() && obstacle_size.lo >= 0.10,
        "obstacle edges must be at least 0.10 m (lidar chord floor)");
  check(clearance.Valid() && clearance.lo >= 0.0, "clearance range");
  check(!exit_width || (exit_width->Valid() &&
                        exit_width->lo > footprint.InscribedRadius()),
        "exit width must exceed the footprint half width");
  check(thresholds.sparse_gap.Valid(), "sparse gap band");
  check(max_attempts > 0 && max_walk_steps > 0, "attempt limits");
}

GeneratorConfig GeneratorConfig::ForClass(ScenarioClass c) {
  return ConfigForClass(GeneratorConfig{}, c);
}

GeneratorConfig ConfigForClass(const GeneratorConfig& base, ScenarioClass c) {
  GeneratorConfig cfg = base;
  cfg.required_features = FeaturesOf(c);
  cfg.sparse_gaps = false;
  cfg.path_length = {1.2, 2.5};
  switch (c) {
    case ScenarioClass::kSimple:
      cfg.clearance = {0.075, 0.15};
      cfg.exit_width.reset();
      break;
    case ScenarioClass::kN:
      cfg.clearance = {0.05, 0.08};
      cfg.exit_width = Range{0.228, 0.242};
      break;
    case ScenarioClass::kNCSL:
      cfg.path_length = {3.3, 4.5};
      [[fallthrough]];
    case ScenarioClass::kNCS:
      cfg.sparse_gaps = true;
      [[fallthrough]];
    case ScenarioClass::kNC:
      cfg.clearance = {0.03, 0.045};
      cfg.exit_width = Range{0.205, 0.222};
      break;
  }
  return cfg;
}

Scenario Generate(const GeneratorConfig& config, std::uint64_t seed) {
  config.Validate();
  for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
    std::mt19937_64 rng(SplitMix(seed ^ SplitMix(static_cast<std::uint64_t>(attempt))));
    Builder builder(config, rng);
    std::optional<Scenario> s = builder.Attempt();
    if (!s) continue;
    if (config.required_features && s->features != *config.required_features) {
      continue;
    }
    s->seed = seed;
    return *s;
  }
  throw GenerationError("scenario generation exceeded " +
                        std::to_string(config.max_attempts) +
                        " attempts for seed " + std::to_string(seed));
}

ScenarioClass ClassForIndex(int index, int count) {
  constexpr int kClasses = std::size(kScenarioClasses);
  // Contiguous strata of near-equal size.
  const int per = count / kClasses;
  const int extra = count % kClasses;
  int start = 0;
  for (int c = 0; c < kClasses; ++c) {
    const int size = per + (c < extra ? 1 : 0);
    if (index < start + size) return kScenarioClasses[c];
    start += size;
  }
  return kScenarioClasses[kClasses - 1];
}

BenchmarkSets BuildBenchmarkSets(const GeneratorConfig& base, int train_count,
                                 int test_count, std::uint64_t seed_base) {
  if (train_count <= 0 || test_count <= 0) {
    throw InvalidArgument("benchmark set sizes must be positive");
  }
  BenchmarkSets sets;
  sets.train.reserve(train_count);
  sets.test.reserve(test_count);
  constexpr int kClasses = std::size(kScenarioClasses);
  for (int i = 0; i < train_count; ++i) {
    sets.train.push_back(Generate(
        ConfigForClass(base, kScenarioClasses[i % kClasses]), seed_base + i));
  }
  for (int i = 0; i < test_count; ++i) {
    sets.test.push_back(
        Generate(ConfigForClass(base, ClassForIndex(i, test_count)),
                 seed_base + kTestSeedOffset + i));
  }
  return sets;
}

}  // namespace escape
