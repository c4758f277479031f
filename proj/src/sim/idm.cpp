#include "mpqp/sim/idm.hpp"

#include <algorithm>
#include <cmath>

namespace mpqp {

double step_idm(double v, double gap, double lead_speed, const IdmParams& p) {
  const double free_term = std::pow(std::max(v, 0.0) / p.desired_speed, p.exponent);
  double interaction = 0.0;
  if (std::isfinite(gap)) {
    const double dv = v - lead_speed;
    const double s_star =
        p.min_spacing + v * p.time_headway + v * dv / (2.0 * std::sqrt(p.max_accel * p.comfort_brake));
    const double g = std::max(gap, 0.1);
    interaction = (s_star / g) * (s_star / g);
  }
  const double acc = p.max_accel * (1.0 - free_term - interaction);
  return std::clamp(acc, p.a_floor, p.max_accel);
}

}  // namespace mpqp
