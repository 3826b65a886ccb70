#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace escape {

inline constexpr std::size_t kActionCount = 42;
inline constexpr std::size_t kRadiusCount = 10;
inline constexpr double kBaseRadius = 0.01;

// Wraps an angle into (-pi, pi].
double NormalizeAngle(double angle);

struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  friend bool operator==(const Pose2&, const Pose2&) = default;
};

// Applies `local` expressed in the frame of `base`. Heading is normalized.
Pose2 Compose(const Pose2& base, const Pose2& local);
// Expresses `world` in the frame of `base`.
Pose2 Relative(const Pose2& base, const Pose2& world);

struct VelocityCommand {
  double omega = 0.0;  // rad/s
  double v = 0.0;      // m/s

  friend bool operator==(const VelocityCommand&,
                         const VelocityCommand&) = default;
};

struct MotionLimits {
  double omega_max = 1.0;  // rad/s
  double v_max = 0.3;      // m/s
  double dt = 0.2;         // s, one control interval

  bool Valid() const { return omega_max > 0.0 && v_max > 0.0 && dt > 0.0; }
  bool Admits(const VelocityCommand& cmd, double tolerance = 1e-12) const;

  friend bool operator==(const MotionLimits&, const MotionLimits&) = default;
};

enum class ActionKind { kInPlaceRotation, kConstantRadiusTurn };

struct DiscreteAction {
  int index = 0;
  VelocityCommand command;
  // Turning radius in meters; 0 for in-place rotations.
  double radius = 0.0;
  ActionKind kind = ActionKind::kInPlaceRotation;

  friend bool operator==(const DiscreteAction&,
                         const DiscreteAction&) = default;
};

// The uniform-turning-radius action family.
//
// Ordering (fixed, so mask vectors and policy outputs line up):
//   0: (+omega_max, 0)    1: (-omega_max, 0)
//   2 + 4*i + s for radius r_i = 0.01 * 2^i, i = 0..9, with sign pattern s:
//     s = 0: (+omega_i, +v_i)  forward, turning left
//     s = 1: (-omega_i, +v_i)  forward, turning right
//     s = 2: (+omega_i, -v_i)  reverse
//     s = 3: (-omega_i, -v_i)  reverse
class DiscreteActionSet {
 public:
  DiscreteActionSet() = default;
  DiscreteActionSet(std::array<DiscreteAction, kActionCount> actions,
                    MotionLimits limits)
      : actions_(actions), limits_(limits) {}

  const DiscreteAction& operator[](std::size_t i) const { return actions_[i]; }
  const DiscreteAction& at(std::size_t i) const { return actions_.at(i); }
  std::size_t size() const { return actions_.size(); }
  auto begin() const { return actions_.begin(); }
  auto end() const { return actions_.end(); }
  const MotionLimits& limits() const { return limits_; }

  friend bool operator==(const DiscreteActionSet&,
                         const DiscreteActionSet&) = default;

 private:
  std::array<DiscreteAction, kActionCount> actions_{};
  MotionLimits limits_;
};

// Exact closed-form arc endpoint after holding `cmd` for `dt` seconds. Falls
// back to the straight-line limit for |omega| < 1e-6 rad/s.
Pose2 IntegrateArc(const Pose2& pose, const VelocityCommand& cmd, double dt);

// Throws InvalidArgument when `limits` are not positive.
DiscreteActionSet BuildActionSpace(const MotionLimits& limits);

// Returns (k * omega, k * v). Throws RangeError if the scaled command leaves
// `limits` and InvalidArgument for k <= 0.
VelocityCommand ScaleAction(const DiscreteAction& action, double k,
                            const MotionLimits& limits);

// Turning radius |v / omega| of a command; infinity for omega == 0.
double TurningRadius(const VelocityCommand& cmd);

}  // namespace escape
