#pragma once

#include <string>
#include <vector>

#include "mpqp/sim/simulator.hpp"

namespace mpqp {

// Batch summary over one scenario. Signed averages are taken over the
// sign-filtered sample sets (brake over a < 0, throttle over a > 0) with
// the sample counts reported alongside so zeros are interpretable.
// Lateral columns are curvature-induced (v^2 * K and its finite
// difference), in m/s^2 and m/s^3.
struct BatchReport {
  std::string scenario;
  int runs = 0;
  double avg_time_s = 0.0;  // mean duration of successful runs
  double success_pct = 0.0, collision_pct = 0.0, timeout_pct = 0.0;
  double brake_avg = 0.0;
  long brake_n = 0;
  double throttle_avg = 0.0;
  long throttle_n = 0;
  double acc_max = 0.0;  // max positive longitudinal acceleration
  double brake_jerk_avg = 0.0;
  long brake_jerk_n = 0;
  double throttle_jerk_avg = 0.0;
  long throttle_jerk_n = 0;
  double lat_acc_avg = 0.0, lat_acc_max = 0.0;
  double lat_jerk_avg = 0.0, lat_jerk_max = 0.0;
  double plan_ms_median = 0.0, plan_ms_max = 0.0;
};

// Throws EmptyBatch on an empty result list.
BatchReport aggregate(const std::vector<SimResult>& results, const std::string& scenario_name);

// Stable column order; documented in the README.
std::string csv_header();
std::string csv_row(const BatchReport& report);

}  // namespace mpqp
