#pragma once

#include <array>
#include <cstddef>
#include <numbers>

namespace mlr {

inline constexpr std::size_t kIrCount = 8;

/// IR ranges in meters, ray k at heading yaw + k * 45 degrees.
using IrDistances = std::array<double, kIrCount>;

struct Limits {
  double v_max = 1.0;  // m/s
  double w_max = 1.5;  // rad/s
};

/// Controller output: desired velocities plus fork position.
struct CommandTriple {
  double linear = 0.0;   // m/s
  double angular = 0.0;  // rad/s, counter-clockwise positive
  double fork = 0.0;     // [0, 1]

  bool operator==(const CommandTriple&) const = default;
};

CommandTriple clamp_command(const CommandTriple& command, const Limits& limits = {});
bool within_limits(const CommandTriple& command, const Limits& limits = {});

struct Pose2D {
  double x = 0.0;    // m
  double y = 0.0;    // m
  double yaw = 0.0;  // rad, in (-pi, pi]

  bool operator==(const Pose2D&) const = default;
};

/// Wraps an angle into (-pi, pi].
double normalize_angle(double angle);

}  // namespace mlr
