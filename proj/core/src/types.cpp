#include "mlr/types.hpp"

#include <algorithm>
#include <cmath>

namespace mlr {

CommandTriple clamp_command(const CommandTriple& command, const Limits& limits) {
  return {std::clamp(command.linear, -limits.v_max, limits.v_max),
          std::clamp(command.angular, -limits.w_max, limits.w_max),
          std::clamp(command.fork, 0.0, 1.0)};
}

bool within_limits(const CommandTriple& command, const Limits& limits) {
  return clamp_command(command, limits) == command;
}

double normalize_angle(double angle) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double wrapped = std::remainder(angle, kTwoPi);  // [-pi, pi]
  if (wrapped <= -std::numbers::pi) wrapped += kTwoPi;
  return wrapped;
}

}  // namespace mlr
