#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mpqp/geometry.hpp"
#include "mpqp/planner.hpp"
#include "mpqp/sim/idm.hpp"

namespace mpqp {

enum class AgentBehavior { kScripted, kIdm, kPedestrian };

struct SpeedSchedulePoint {
  double t = 0.0;
  double speed = 0.0;
};

struct AgentSpec {
  std::string id;
  AgentBehavior behavior = AgentBehavior::kIdm;
  double length = 4.6;
  double width = 1.8;
  double margin = 1.0;
  std::vector<Vec2> route;
  double init_s = 0.0;
  double init_speed = 0.0;
  // per-run randomization (uniform offsets drawn from these ranges)
  double s_jitter_lo = 0.0, s_jitter_hi = 0.0;
  double speed_jitter_lo = 0.0, speed_jitter_hi = 0.0;
  double desired_speed_lo = 0.0, desired_speed_hi = 0.0;  // 0,0 = keep idm value
  double yield_probability = 0.0;
  IdmParams idm;
  std::vector<SpeedSchedulePoint> schedule;  // scripted: piecewise-constant speed
  double walk_flip_rate = 0.05;              // pedestrian direction changes per second
};

struct Scenario {
  std::string name = "scenario";
  std::vector<Vec2> path_waypoints;
  double path_ds = 0.5;
  double ego_s0 = 0.0, ego_v0 = 0.0, ego_a0 = 0.0;
  double ego_length = 4.8, ego_width = 1.9;
  double success_s_min = 0.0, success_s_max = 0.0;
  double time_limit = 80.0;
  std::vector<AgentSpec> agents;
};

// Loads a scenario file (JSON, // comments allowed). Throws ConfigParse
// with a line diagnostic on malformed input.
Scenario load_scenario(const std::string& file);

// Planner config file on top of built-in defaults.
PlannerConfig load_planner_config(const std::string& file);

// Full schema and invariant check without running; each entry names the
// offending field. Empty result means the file is usable.
std::vector<std::string> validate_scenario_file(const std::string& file);

std::vector<std::string> validate_scenario(const Scenario& scenario);

}  // namespace mpqp
