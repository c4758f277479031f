#pragma once

#include <limits>

namespace mpqp {

struct IdmParams {
  double desired_speed = 8.0;   // v0
  double time_headway = 1.0;    // T
  double min_spacing = 2.0;     // s0
  double max_accel = 2.5;       // a
  double comfort_brake = 2.5;   // b
  double exponent = 4.0;
  double a_floor = -8.0;        // clip for emergency braking
};

// Car-following acceleration. gap is bumper-to-bumper distance to the
// leader; pass +inf when there is none.
double step_idm(double v, double gap, double lead_speed, const IdmParams& params);

constexpr double kNoLeaderGap = std::numeric_limits<double>::infinity();

}  // namespace mpqp
