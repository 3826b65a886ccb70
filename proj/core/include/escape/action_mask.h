#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "escape/geometry.h"
#include "escape/kinematics.h"
#include "escape/lidar.h"

namespace escape {

struct MaskOptions {
  // Sweep sampling step; no footprint point moves more than this between
  // consecutive sampled poses.
  double ds = 0.005;
  // Footprint growth applied when tracing boundary points. Covers the motion
  // between samples (ds) plus obstacle corners that sit between two rays.
  double margin = 0.01;

  friend bool operator==(const MaskOptions&, const MaskOptions&) = default;
};

// Per-action, per-ray far boundary of the one-step swept footprint, in the
// robot body frame. Scene independent.
class BoundaryTable {
 public:
  BoundaryTable() = default;
  BoundaryTable(int action_count, int ray_count, std::uint64_t key,
                std::vector<double> distances);

  int action_count() const { return action_count_; }
  int ray_count() const { return ray_count_; }
  std::uint64_t key() const { return key_; }
  double at(int action, int ray) const {
    return distances_[static_cast<std::size_t>(action) * ray_count_ + ray];
  }
  std::span<const double> row(int action) const {
    return {distances_.data() + static_cast<std::size_t>(action) * ray_count_,
            static_cast<std::size_t>(ray_count_)};
  }
  const std::vector<double>& data() const { return distances_; }

  friend bool operator==(const BoundaryTable&, const BoundaryTable&) = default;

 private:
  int action_count_ = 0;
  int ray_count_ = 0;
  std::uint64_t key_ = 0;
  std::vector<double> distances_;
};

struct ActionValidity {
  std::array<bool, kActionCount> valid{};

  std::size_t Count() const;
  bool Any() const { return Count() > 0; }
  // "0"/"1" per action, index order.
  std::string ToBitString() const;

  friend bool operator==(const ActionValidity&,
                         const ActionValidity&) = default;
};

// Content hash of every input the table depends on.
std::uint64_t BoundaryTableKey(const Footprint& fp, const MotionLimits& limits,
                               const LidarSpec& spec, double dt,
                               const MaskOptions& options);

BoundaryTable PrecomputeBoundaryTable(const Footprint& fp,
                                      const DiscreteActionSet& set,
                                      const LidarSpec& spec, double dt,
                                      const MaskOptions& options = {});

// valid[a] iff ranges[j] >= boundary[a][j] for every ray. Throws
// InvalidArgument when the ray counts differ.
ActionValidity ComputeMask(std::span<const double> ranges,
                           const BoundaryTable& table);
ActionValidity ComputeMask(const ScanFrame& scan, const BoundaryTable& table);

// Test oracle: valid[a] iff the whole one-step sweep of action a is free.
ActionValidity BruteForceMask(const Footprint& fp, const Pose2& pose,
                              const DiscreteActionSet& set,
                              const ObstacleSet& obs, double dt,
                              double ds = 0.005);

// Binary cache, little-endian:
//   [0, 8)   magic "ESCBTBL1"
//   [8, 16)  uint64 key (BoundaryTableKey)
//   [16, 20) uint32 action count A
//   [20, 24) uint32 ray count R
//   [24, ..) A * R float64 distances, row-major by action
void SaveBoundaryTable(const BoundaryTable& table,
                       const std::filesystem::path& path);
BoundaryTable LoadBoundaryTable(const std::filesystem::path& path);

// Loads `<dir>/boundary_<key>.bin` when present and matching, otherwise
// builds the table and writes it there.
BoundaryTable LoadOrBuildBoundaryTable(const std::filesystem::path& dir,
                                       const Footprint& fp,
                                       const DiscreteActionSet& set,
                                       const LidarSpec& spec, double dt,
                                       const MaskOptions& options = {});

}  // namespace escape
