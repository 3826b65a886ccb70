#include "escape/kinematics.h"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "escape/errors.h"

namespace escape {
namespace {

constexpr double kStraightThreshold = 1e-6;

}  // namespace

double NormalizeAngle(double angle) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double a = std::fmod(angle, kTwoPi);
  if (a <= -std::numbers::pi) {
    a += kTwoPi;
  } else if (a > std::numbers::pi) {
    a -= kTwoPi;
  }
  return a;
}

Pose2 Compose(const Pose2& base, const Pose2& local) {
  const double c = std::cos(base.theta);
  const double s = std::sin(base.theta);
  return {base.x + c * local.x - s * local.y,
          base.y + s * local.x + c * local.y,
          NormalizeAngle(base.theta + local.theta)};
}

Pose2 Relative(const Pose2& base, const Pose2& world) {
  const double c = std::cos(base.theta);
  const double s = std::sin(base.theta);
  const double dx = world.x - base.x;
  const double dy = world.y - base.y;
  return {c * dx + s * dy, -s * dx + c * dy,
          NormalizeAngle(world.theta - base.theta)};
}

bool MotionLimits::Admits(const VelocityCommand& cmd, double tolerance) const {
  return std::abs(cmd.omega) <= omega_max * (1.0 + tolerance) &&
         std::abs(cmd.v) <= v_max * (1.0 + tolerance);
}

Pose2 IntegrateArc(const Pose2& pose, const VelocityCommand& cmd, double dt) {
  if (std::abs(cmd.omega) < kStraightThreshold) {
    return {pose.x + cmd.v * dt * std::cos(pose.theta),
            pose.y + cmd.v * dt * std::sin(pose.theta), pose.theta};
  }
  const double theta_next = pose.theta + cmd.omega * dt;
  const double r = cmd.v / cmd.omega;
  return {pose.x + r * (std::sin(theta_next) - std::sin(pose.theta)),
          pose.y - r * (std::cos(theta_next) - std::cos(pose.theta)),
          NormalizeAngle(theta_next)};
}

DiscreteActionSet BuildActionSpace(const MotionLimits& limits) {
  if (!limits.Valid()) {
    throw InvalidArgument("motion limits must be positive");
  }
  std::array<DiscreteAction, kActionCount> actions{};
  actions[0] = {0, {limits.omega_max, 0.0}, 0.0, ActionKind::kInPlaceRotation};
  actions[1] = {1, {-limits.omega_max, 0.0}, 0.0, ActionKind::kInPlaceRotation};
  for (std::size_t i = 0; i < kRadiusCount; ++i) {
    const double r = kBaseRadius * std::ldexp(1.0, static_cast<int>(i));
    const double omega = std::min(limits.omega_max, limits.v_max / r);
    const double v = std::min(limits.v_max, limits.omega_max * r);
    constexpr int kSigns[4][2] = {{1, 1}, {-1, 1}, {1, -1}, {-1, -1}};
    for (int s = 0; s < 4; ++s) {
      const int index = 2 + 4 * static_cast<int>(i) + s;
      actions[index] = {index,
                        {kSigns[s][0] * omega, kSigns[s][1] * v},
                        r,
                        ActionKind::kConstantRadiusTurn};
    }
  }
  return DiscreteActionSet(actions, limits);
}

VelocityCommand ScaleAction(const DiscreteAction& action, double k,
                            const MotionLimits& limits) {
  if (!(k > 0.0)) {
    throw InvalidArgument("scale factor must be positive");
  }
  const VelocityCommand scaled{k * action.command.omega, k * action.command.v};
  if (!limits.Admits(scaled)) {
    throw RangeError("scaled action " + std::to_string(action.index) +
                     " (k=" + std::to_string(k) + ") exceeds motion limits");
  }
  return scaled;
}

double TurningRadius(const VelocityCommand& cmd) {
  if (cmd.omega == 0.0) return std::numeric_limits<double>::infinity();
  return std::abs(cmd.v / cmd.omega);
}

}  // namespace escape
