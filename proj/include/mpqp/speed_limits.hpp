#pragma once

#include <vector>

#include "mpqp/frenet_path.hpp"

namespace mpqp {

// Per-step speed upper bound combining the traffic limit with a
// curvature-derived limit, shaped so the bound never jumps below the
// current speed and never decreases faster than the funnel rate.
struct SpeedBound {
  std::vector<double> ub_v;           // per planning step
  std::vector<double> v_limit_curve;  // per path station
  double lookahead = 0.0;             // m
  double funnel_rate = 0.0;           // m/s per step
  double v_limit = 0.0;               // binding limit within the lookahead
};

// v_s = min(sqrt(a_lat / max(|K|, eps)), v_max) per station.
std::vector<double> curvature_speed_limit(const FrenetPath& path, double a_lat, double v_max);

// Builds the per-step bound: ahead of the limiting curvature region the
// bound ramps down toward the region limit at rate (-a_min/2)*dt per step,
// holds that limit until the region exit, then (optionally) releases back
// toward v_max at the same rate. A floor anchored at the nominal speed
// keeps the first steps feasible when the vehicle is still above the
// limit. Stations are mapped to steps at nominal_speed_for_mapping.
SpeedBound build_funnel(const FrenetPath& path, double ego_s0, const std::vector<double>& v_s,
                        double lookahead_L, double a_min, double v_max, double dt, int n_steps,
                        double nominal_speed_for_mapping, bool release = true);

}  // namespace mpqp
