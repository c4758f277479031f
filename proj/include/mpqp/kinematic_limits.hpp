#pragma once

namespace mpqp {

// Box limits on speed, acceleration and jerk.
struct KinematicLimits {
  double v_min = 0.0;
  double v_max = 15.0;
  double a_min = -4.0;
  double a_max = 2.5;
  double j_min = -5.0;
  double j_max = 5.0;

  bool valid() const {
    return v_min >= 0.0 && v_min <= v_max && a_min < 0.0 && a_max > 0.0 && j_min < 0.0 &&
           j_max > 0.0;
  }
};

}  // namespace mpqp
