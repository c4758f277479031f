#include "mpqp/speed_limits.hpp"

#include <algorithm>
#include <cmath>

#include "mpqp/errors.hpp"

namespace mpqp {

namespace {
constexpr double kCurvatureFloor = 1e-6;
}

std::vector<double> curvature_speed_limit(const FrenetPath& path, double a_lat, double v_max) {
  if (a_lat <= 0.0) throw DimensionMismatch("curvature_speed_limit: a_lat must be positive");
  std::vector<double> v_s(path.size());
  for (std::size_t i = 0; i < path.size(); ++i) {
    const double k = std::max(std::abs(path.curvatures[i]), kCurvatureFloor);
    v_s[i] = std::min(std::sqrt(a_lat / k), v_max);
  }
  return v_s;
}

SpeedBound build_funnel(const FrenetPath& path, double ego_s0, const std::vector<double>& v_s,
                        double lookahead_L, double a_min, double v_max, double dt, int n_steps,
                        double nominal_speed_for_mapping, bool release) {
  if (lookahead_L <= 0.0 || a_min >= 0.0) {
    throw DimensionMismatch("build_funnel: lookahead_L > 0 and a_min < 0 required");
  }

  SpeedBound out;
  out.lookahead = lookahead_L;
  out.funnel_rate = 0.5 * (-a_min) * dt;
  out.v_limit_curve = v_s;
  out.v_limit = v_max;
  out.ub_v.assign(n_steps, v_max);

  const double nominal = std::max(nominal_speed_for_mapping, 1.0);

  // Limiting region within the lookahead window.
  const double window_end = std::min(ego_s0 + lookahead_L, path.length());
  double region_entry = 0.0, region_exit = 0.0;
  bool has_region = false;
  for (std::size_t i = 0; i < path.size(); ++i) {
    const double s = path.stations[i];
    if (s < ego_s0 || s > window_end) continue;
    if (v_s[i] < v_max - 1e-9) {
      if (!has_region) {
        region_entry = s;
        has_region = true;
      }
      region_exit = s;
      out.v_limit = std::min(out.v_limit, v_s[i]);
    }
  }
  if (!has_region) return out;  // bound stays at v_max

  const double r = out.funnel_rate;               // m/s per step
  const double step_advance = dt * nominal;       // m per step (nominal mapping)
  const double floor_anchor = std::min(nominal, v_max);

  for (int t = 0; t < n_steps; ++t) {
    const double s_t = ego_s0 + t * step_advance;
    double region_bound;
    if (s_t < region_entry) {
      region_bound = std::min(v_max, out.v_limit + r * (region_entry - s_t) / step_advance);
    } else if (s_t <= region_exit) {
      region_bound = out.v_limit;
    } else if (release) {
      region_bound = std::min(v_max, out.v_limit + r * (s_t - region_exit) / step_advance);
    } else {
      region_bound = out.v_limit;
    }
    const double feasibility_floor = floor_anchor - r * t;
    out.ub_v[t] = std::clamp(std::max(region_bound, feasibility_floor), out.v_limit, v_max);
  }
  return out;
}

}  // namespace mpqp
