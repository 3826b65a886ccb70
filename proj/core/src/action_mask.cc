#include "escape/action_mask.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>

#include "escape/errors.h"

namespace escape {
namespace {

constexpr char kMagic[8] = {'E', 'S', 'C', 'B', 'T', 'B', 'L', '1'};

class Fnv1a {
 public:
  void Add(const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      hash_ ^= bytes[i];
      hash_ *= 0x100000001b3ULL;
    }
  }
  void Add(double v) { Add(&v, sizeof v); }
  void Add(std::int64_t v) { Add(&v, sizeof v); }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

// Far intersection of a ray from the body origin with a rotated rectangle,
// or 0 if the ray misses it.
double FarRectangleHit(Vec2 dir, const Pose2& center, double half_x,
                       double half_y) {
  const double c = std::cos(center.theta);
  const double s = std::sin(center.theta);
  // Ray origin and direction in the rectangle frame.
  const double ox = -(c * center.x + s * center.y);
  const double oy = -(-s * center.x + c * center.y);
  const double dx = c * dir.x + s * dir.y;
  const double dy = -s * dir.x + c * dir.y;
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  const double o[2] = {ox, oy};
  const double d[2] = {dx, dy};
  const double h[2] = {half_x, half_y};
  for (int k = 0; k < 2; ++k) {
    if (d[k] == 0.0) {
      if (std::abs(o[k]) > h[k]) return 0.0;
      continue;
    }
    double t0 = (-h[k] - o[k]) / d[k];
    double t1 = (h[k] - o[k]) / d[k];
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
  }
  if (t_far < std::max(t_near, 0.0)) return 0.0;
  return t_far;
}

template <typename T>
void PutLe(std::string& out, T value) {
  static_assert(std::endian::native == std::endian::little,
                "boundary table cache assumes a little-endian host");
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T GetLe(const std::string& in, std::size_t offset) {
  T value;
  std::memcpy(&value, in.data() + offset, sizeof(T));
  return value;
}

}  // namespace

BoundaryTable::BoundaryTable(int action_count, int ray_count,
                             std::uint64_t key, std::vector<double> distances)
    : action_count_(action_count),
      ray_count_(ray_count),
      key_(key),
      distances_(std::move(distances)) {
  if (distances_.size() !=
      static_cast<std::size_t>(action_count) * static_cast<std::size_t>(ray_count)) {
    throw InvalidArgument("boundary table size does not match its dimensions");
  }
}

std::size_t ActionValidity::Count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), true));
}

std::string ActionValidity::ToBitString() const {
  std::string bits;
  bits.reserve(valid.size());
  for (bool v : valid) bits.push_back(v ? '1' : '0');
  return bits;
}

std::uint64_t BoundaryTableKey(const Footprint& fp, const MotionLimits& limits,
                               const LidarSpec& spec, double dt,
                               const MaskOptions& options) {
  Fnv1a h;
  h.Add(kMagic, sizeof kMagic);
  h.Add(fp.half_width);
  h.Add(fp.half_length);
  h.Add(limits.omega_max);
  h.Add(limits.v_max);
  h.Add(limits.dt);
  h.Add(static_cast<std::int64_t>(spec.ray_count));
  h.Add(spec.max_range);
  h.Add(dt);
  h.Add(options.ds);
  h.Add(options.margin);
  return h.value();
}

BoundaryTable PrecomputeBoundaryTable(const Footprint& fp,
                                      const DiscreteActionSet& set,
                                      const LidarSpec& spec, double dt,
                                      const MaskOptions& options) {
  if (!spec.Valid()) throw InvalidArgument("invalid lidar spec");
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  const int actions = static_cast<int>(set.size());
  const int rays = spec.ray_count;
  const Footprint grown = fp.Expanded(options.margin);

  std::vector<Vec2> dirs(rays);
  for (int j = 0; j < rays; ++j) {
    dirs[j] = {std::cos(spec.RayAngle(j)), std::sin(spec.RayAngle(j))};
  }

  std::vector<double> distances(static_cast<std::size_t>(actions) * rays, 0.0);
  for (int a = 0; a < actions; ++a) {
    // Grid samples only: every later pose is within ds of some grid pose,
    // and a shorter step's grid is a prefix of this one.
    const std::vector<SweepSample> samples =
        SweepSamples(fp, set[a].command, dt, options.ds, false);
    double* row = distances.data() + static_cast<std::size_t>(a) * rays;
    for (const SweepSample& sample : samples) {
      for (int j = 0; j < rays; ++j) {
        const double t = FarRectangleHit(dirs[j], sample.pose,
                                         grown.half_length, grown.half_width);
        if (t > row[j]) row[j] = t;
      }
    }
  }
  return BoundaryTable(actions, rays,
                       BoundaryTableKey(fp, set.limits(), spec, dt, options),
                       std::move(distances));
}

ActionValidity ComputeMask(std::span<const double> ranges,
                           const BoundaryTable& table) {
  if (ranges.size() != static_cast<std::size_t>(table.ray_count())) {
    throw InvalidArgument("scan has " + std::to_string(ranges.size()) +
                          " rays, boundary table expects " +
                          std::to_string(table.ray_count()));
  }
  ActionValidity out;
  const int actions = std::min<int>(table.action_count(), kActionCount);
  for (int a = 0; a < actions; ++a) {
    const std::span<const double> row = table.row(a);
    bool ok = true;
    for (std::size_t j = 0; j < row.size() && ok; ++j) {
      ok = ranges[j] >= row[j];
    }
    out.valid[a] = ok;
  }
  return out;
}

ActionValidity ComputeMask(const ScanFrame& scan, const BoundaryTable& table) {
  return ComputeMask(std::span<const double>(scan.ranges), table);
}

ActionValidity BruteForceMask(const Footprint& fp, const Pose2& pose,
                              const DiscreteActionSet& set,
                              const ObstacleSet& obs, double dt, double ds) {
  ActionValidity out;
  for (std::size_t a = 0; a < set.size() && a < kActionCount; ++a) {
    const VelocityCommand& cmd = set[a].command;
    const double step = ArcRate(fp, cmd) * dt;
    out.valid[a] = MaxFreeArc(fp, pose, cmd, obs, step, ds) >= step;
  }
  return out;
}

void SaveBoundaryTable(const BoundaryTable& table,
                       const std::filesystem::path& path) {
  std::string bytes(kMagic, sizeof kMagic);
  PutLe<std::uint64_t>(bytes, table.key());
  PutLe<std::uint32_t>(bytes, static_cast<std::uint32_t>(table.action_count()));
  PutLe<std::uint32_t>(bytes, static_cast<std::uint32_t>(table.ray_count()));
  for (double d : table.data()) PutLe<double>(bytes, d);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write boundary table: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing boundary table: " + path.string());
}

BoundaryTable LoadBoundaryTable(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read boundary table: " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  constexpr std::size_t kHeader = 24;
  if (bytes.size() < kHeader ||
      std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw ParseError("not a boundary table file: " + path.string());
  }
  const auto key = GetLe<std::uint64_t>(bytes, 8);
  const auto actions = GetLe<std::uint32_t>(bytes, 16);
  const auto rays = GetLe<std::uint32_t>(bytes, 20);
  const std::size_t count = static_cast<std::size_t>(actions) * rays;
  if (bytes.size() != kHeader + count * sizeof(double)) {
    throw ParseError("truncated boundary table: " + path.string());
  }
  std::vector<double> distances(count);
  for (std::size_t i = 0; i < count; ++i) {
    distances[i] = GetLe<double>(bytes, kHeader + i * sizeof(double));
  }
  return BoundaryTable(static_cast<int>(actions), static_cast<int>(rays), key,
                       std::move(distances));
}

BoundaryTable LoadOrBuildBoundaryTable(const std::filesystem::path& dir,
                                       const Footprint& fp,
                                       const DiscreteActionSet& set,
                                       const LidarSpec& spec, double dt,
                                       const MaskOptions& options) {
  const std::uint64_t key =
      BoundaryTableKey(fp, set.limits(), spec, dt, options);
  char name[64];
  std::snprintf(name, sizeof name, "boundary_%016llx.bin",
                static_cast<unsigned long long>(key));
  const std::filesystem::path path = dir / name;
  if (std::filesystem::exists(path)) {
    try {
      BoundaryTable cached = LoadBoundaryTable(path);
      if (cached.key() == key && cached.ray_count() == spec.ray_count &&
          cached.action_count() == static_cast<int>(set.size())) {
        return cached;
      }
    } catch (const Error&) {
      // Stale or corrupt; rebuilt below.
    }
  }
  BoundaryTable table = PrecomputeBoundaryTable(fp, set, spec, dt, options);
  std::filesystem::create_directories(dir);
  SaveBoundaryTable(table, path);
  return table;
}

}  // namespace escape
