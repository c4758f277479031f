#include "mpqp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mpqp/errors.hpp"

namespace mpqp {

BatchReport aggregate(const std::vector<SimResult>& results, const std::string& scenario_name) {
  if (results.empty()) throw EmptyBatch("aggregate: no results");

  BatchReport r;
  r.scenario = scenario_name;
  r.runs = static_cast<int>(results.size());

  int successes = 0, collisions = 0, timeouts = 0;
  double success_time = 0.0;
  double brake_sum = 0.0, thr_sum = 0.0, bj_sum = 0.0, tj_sum = 0.0;
  double lat_sum = 0.0, latj_sum = 0.0;
  long lat_n = 0, latj_n = 0;
  std::vector<double> plan_ms;

  for (const SimResult& res : results) {
    switch (res.outcome) {
      case Outcome::kSuccess:
        ++successes;
        success_time += res.duration;
        break;
      case Outcome::kCollision:
        ++collisions;
        break;
      case Outcome::kTimeout:
        ++timeouts;
        break;
    }
    double prev_lat = 0.0;
    bool have_prev = false;
    double prev_t = 0.0;
    for (const EgoTick& e : res.ego_trace) {
      if (e.a < 0.0) {
        brake_sum += e.a;
        ++r.brake_n;
      } else if (e.a > 0.0) {
        thr_sum += e.a;
        ++r.throttle_n;
        r.acc_max = std::max(r.acc_max, e.a);
      }
      if (e.j < 0.0) {
        bj_sum += e.j;
        ++r.brake_jerk_n;
      } else if (e.j > 0.0) {
        tj_sum += e.j;
        ++r.throttle_jerk_n;
      }
      const double lat = std::abs(e.lat_acc);
      lat_sum += lat;
      ++lat_n;
      r.lat_acc_max = std::max(r.lat_acc_max, lat);
      if (have_prev && e.t > prev_t) {
        const double lj = std::abs((e.lat_acc - prev_lat) / (e.t - prev_t));
        latj_sum += lj;
        ++latj_n;
        r.lat_jerk_max = std::max(r.lat_jerk_max, lj);
      }
      prev_lat = e.lat_acc;
      prev_t = e.t;
      have_prev = true;
    }
    plan_ms.insert(plan_ms.end(), res.plan_ms.begin(), res.plan_ms.end());
  }

  const double n = static_cast<double>(r.runs);
  r.success_pct = 100.0 * successes / n;
  r.collision_pct = 100.0 * collisions / n;
  r.timeout_pct = 100.0 * timeouts / n;
  r.avg_time_s = successes > 0 ? success_time / successes : 0.0;
  r.brake_avg = r.brake_n > 0 ? brake_sum / r.brake_n : 0.0;
  r.throttle_avg = r.throttle_n > 0 ? thr_sum / r.throttle_n : 0.0;
  r.brake_jerk_avg = r.brake_jerk_n > 0 ? bj_sum / r.brake_jerk_n : 0.0;
  r.throttle_jerk_avg = r.throttle_jerk_n > 0 ? tj_sum / r.throttle_jerk_n : 0.0;
  r.lat_acc_avg = lat_n > 0 ? lat_sum / lat_n : 0.0;
  r.lat_jerk_avg = latj_n > 0 ? latj_sum / latj_n : 0.0;

  if (!plan_ms.empty()) {
    std::sort(plan_ms.begin(), plan_ms.end());
    r.plan_ms_median = plan_ms[plan_ms.size() / 2];
    r.plan_ms_max = plan_ms.back();
  }
  return r;
}

std::string csv_header() {
  return "scenario,runs,avg_time_s,success_pct,collision_pct,timeout_pct,"
         "brake_avg,brake_n,throttle_avg,throttle_n,acc_max,"
         "brake_jerk_avg,brake_jerk_n,throttle_jerk_avg,throttle_jerk_n,"
         "lat_acc_avg,lat_acc_max,lat_jerk_avg,lat_jerk_max,"
         "plan_ms_median,plan_ms_max";
}

std::string csv_row(const BatchReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%s,%d,%.6g,%.6g,%.6g,%.6g,%.6g,%ld,%.6g,%ld,%.6g,%.6g,%ld,%.6g,%ld,"
                "%.6g,%.6g,%.6g,%.6g,%.6g,%.6g",
                r.scenario.c_str(), r.runs, r.avg_time_s, r.success_pct, r.collision_pct,
                r.timeout_pct, r.brake_avg, r.brake_n, r.throttle_avg, r.throttle_n, r.acc_max,
                r.brake_jerk_avg, r.brake_jerk_n, r.throttle_jerk_avg, r.throttle_jerk_n,
                r.lat_acc_avg, r.lat_acc_max, r.lat_jerk_avg, r.lat_jerk_max, r.plan_ms_median,
                r.plan_ms_max);
  return buf;
}

}  // namespace mpqp
