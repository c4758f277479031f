#include "mpqp/sim/scenario.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "mpqp/errors.hpp"
#include "mpqp/frenet_path.hpp"

namespace mpqp {

namespace {

using nlohmann::json;

json parse_file(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open " + file);
  try {
    return json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigParse(file + ": " + e.what());
  }
}

std::vector<Vec2> read_waypoints(const json& arr) {
  std::vector<Vec2> pts;
  for (const auto& p : arr) {
    pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  }
  return pts;
}

AgentBehavior parse_behavior(const std::string& s) {
  if (s == "scripted") return AgentBehavior::kScripted;
  if (s == "idm") return AgentBehavior::kIdm;
  if (s == "pedestrian") return AgentBehavior::kPedestrian;
  throw ConfigParse("unknown agent behavior: " + s);
}

AgentSpec parse_agent(const json& j) {
  AgentSpec a;
  a.id = j.value("id", "");
  a.behavior = parse_behavior(j.value("behavior", "idm"));
  if (j.contains("footprint")) {
    a.length = j["footprint"].value("length", a.length);
    a.width = j["footprint"].value("width", a.width);
  }
  a.margin = j.value("margin", a.margin);
  if (j.contains("route")) a.route = read_waypoints(j["route"]);
  if (j.contains("init")) {
    a.init_s = j["init"].value("s", 0.0);
    a.init_speed = j["init"].value("speed", 0.0);
  }
  if (j.contains("random")) {
    const json& r = j["random"];
    if (r.contains("s_range")) {
      a.s_jitter_lo = r["s_range"].at(0).get<double>();
      a.s_jitter_hi = r["s_range"].at(1).get<double>();
    }
    if (r.contains("speed_range")) {
      a.speed_jitter_lo = r["speed_range"].at(0).get<double>();
      a.speed_jitter_hi = r["speed_range"].at(1).get<double>();
    }
    if (r.contains("desired_speed_range")) {
      a.desired_speed_lo = r["desired_speed_range"].at(0).get<double>();
      a.desired_speed_hi = r["desired_speed_range"].at(1).get<double>();
    }
  }
  a.yield_probability = j.value("yield_probability", 0.0);
  if (j.contains("idm")) {
    const json& p = j["idm"];
    a.idm.desired_speed = p.value("desired_speed", a.idm.desired_speed);
    a.idm.time_headway = p.value("time_headway", a.idm.time_headway);
    a.idm.min_spacing = p.value("min_spacing", a.idm.min_spacing);
    a.idm.max_accel = p.value("max_accel", a.idm.max_accel);
    a.idm.comfort_brake = p.value("comfort_brake", a.idm.comfort_brake);
    a.idm.exponent = p.value("exponent", a.idm.exponent);
  }
  if (j.contains("schedule")) {
    for (const auto& s : j["schedule"]) {
      a.schedule.push_back({s.value("t", 0.0), s.value("speed", 0.0)});
    }
  }
  a.walk_flip_rate = j.value("walk_flip_rate", a.walk_flip_rate);
  return a;
}

}  // namespace

Scenario load_scenario(const std::string& file) {
  const json j = parse_file(file);
  Scenario sc;
  try {
    sc.name = j.value("name", sc.name);
    if (j.contains("path")) {
      sc.path_waypoints = read_waypoints(j["path"].at("waypoints"));
      sc.path_ds = j["path"].value("ds", sc.path_ds);
    }
    if (j.contains("ego")) {
      const json& e = j["ego"];
      sc.ego_s0 = e.value("s0", 0.0);
      sc.ego_v0 = e.value("v0", 0.0);
      sc.ego_a0 = e.value("a0", 0.0);
      sc.ego_length = e.value("length", sc.ego_length);
      sc.ego_width = e.value("width", sc.ego_width);
    }
    if (j.contains("success")) {
      sc.success_s_min = j["success"].value("s_min", 0.0);
      sc.success_s_max = j["success"].value("s_max", sc.success_s_min + 10.0);
    }
    sc.time_limit = j.value("time_limit", sc.time_limit);
    if (j.contains("agents")) {
      for (const auto& a : j["agents"]) sc.agents.push_back(parse_agent(a));
    }
  } catch (const json::exception& e) {
    throw ConfigParse(file + ": " + e.what());
  }
  return sc;
}

PlannerConfig load_planner_config(const std::string& file) {
  const json j = parse_file(file);
  PlannerConfig c;
  try {
    c.dt = j.value("dt", c.dt);
    c.horizon = j.value("horizon", c.horizon);
    if (j.contains("limits")) {
      const json& l = j["limits"];
      c.limits.v_min = l.value("v_min", c.limits.v_min);
      c.limits.v_max = l.value("v_max", c.limits.v_max);
      c.limits.a_min = l.value("a_min", c.limits.a_min);
      c.limits.a_max = l.value("a_max", c.limits.a_max);
      c.limits.j_min = l.value("j_min", c.limits.j_min);
      c.limits.j_max = l.value("j_max", c.limits.j_max);
    }
    if (j.contains("weights")) {
      const json& w = j["weights"];
      c.weights.w_a = w.value("w_a", c.weights.w_a);
      c.weights.w_j = w.value("w_j", c.weights.w_j);
      c.weights.w_f = w.value("w_f", c.weights.w_f);
      c.weights.w_b = w.value("w_b", c.weights.w_b);
    }
    c.soft = j.value("soft", c.soft);
    c.slack_cap_lb = j.value("slack_cap_lb", c.slack_cap_lb);
    c.slack_cap_ub = j.value("slack_cap_ub", c.slack_cap_ub);
    c.ego_length = j.value("ego_length", c.ego_length);
    c.ego_width = j.value("ego_width", c.ego_width);
    c.sweep_radius = j.value("sweep_radius", c.sweep_radius);
    c.s_bound_slack = j.value("s_bound_slack", c.s_bound_slack);
    c.lead_shift_steps = j.value("lead_shift_steps", c.lead_shift_steps);
    c.trail_shift_steps = j.value("trail_shift_steps", c.trail_shift_steps);
    c.min_gap_extra = j.value("min_gap_extra", c.min_gap_extra);
    c.max_profiles = j.value("max_profiles", c.max_profiles);
    c.a_lat = j.value("a_lat", c.a_lat);
    c.lookahead = j.value("lookahead", c.lookahead);
    c.funnel_release = j.value("funnel_release", c.funnel_release);
    c.fallback_decel = j.value("fallback_decel", c.fallback_decel);
  } catch (const json::exception& e) {
    throw ConfigParse(file + ": " + e.what());
  }
  return c;
}

std::vector<std::string> validate_scenario(const Scenario& sc) {
  std::vector<std::string> diags;
  auto fail = [&](const std::string& field, const std::string& msg) {
    diags.push_back(field + ": " + msg);
  };

  if (sc.path_waypoints.size() < 2) {
    fail("path.waypoints", "at least 2 waypoints required");
  }
  if (sc.path_ds <= 0.0) fail("path.ds", "must be positive");
  double path_length = 0.0;
  if (sc.path_waypoints.size() >= 2) {
    try {
      const FrenetPath path = build_path(sc.path_waypoints, sc.path_ds);
      path_length = path.length();
    } catch (const Error& e) {
      fail("path.waypoints", e.what());
    }
  }
  if (sc.ego_v0 < 0.0) fail("ego.v0", "must be non-negative");
  if (sc.ego_length <= 0.0 || sc.ego_width <= 0.0) fail("ego", "footprint must be positive");
  if (path_length > 0.0) {
    if (sc.ego_s0 < 0.0 || sc.ego_s0 >= path_length) {
      fail("ego.s0", "outside path length");
    }
    if (sc.success_s_min >= sc.success_s_max) {
      fail("success", "s_min must be below s_max");
    } else if (sc.success_s_max > path_length) {
      fail("success", "region beyond path length");
    }
  }
  if (sc.time_limit <= 0.0) fail("time_limit", "must be positive");

  for (std::size_t i = 0; i < sc.agents.size(); ++i) {
    const AgentSpec& a = sc.agents[i];
    const std::string base = "agents[" + std::to_string(i) + "]";
    if (a.id.empty()) fail(base + ".id", "must be non-empty");
    for (std::size_t k = 0; k < i; ++k) {
      if (sc.agents[k].id == a.id) fail(base + ".id", "duplicate id");
    }
    if (a.length <= 0.0 || a.width <= 0.0) fail(base + ".footprint", "must be positive");
    if (a.margin < 0.0) fail(base + ".margin", "must be non-negative");
    if (a.route.size() < 2) fail(base + ".route", "at least 2 waypoints required");
    if (a.yield_probability < 0.0 || a.yield_probability > 1.0) {
      fail(base + ".yield_probability", "must lie in [0, 1]");
    }
    if (a.init_speed < 0.0) fail(base + ".init.speed", "must be non-negative");
    if (a.s_jitter_lo > a.s_jitter_hi) fail(base + ".random.s_range", "lo > hi");
    if (a.speed_jitter_lo > a.speed_jitter_hi) fail(base + ".random.speed_range", "lo > hi");
    if (a.desired_speed_lo > a.desired_speed_hi) {
      fail(base + ".random.desired_speed_range", "lo > hi");
    }
    if (a.behavior == AgentBehavior::kIdm) {
      if (a.idm.desired_speed <= 0.0) fail(base + ".idm.desired_speed", "must be positive");
      if (a.idm.max_accel <= 0.0 || a.idm.comfort_brake <= 0.0) {
        fail(base + ".idm", "accelerations must be positive");
      }
    }
    if (a.behavior == AgentBehavior::kScripted && a.schedule.empty()) {
      fail(base + ".schedule", "scripted agent needs a speed schedule");
    }
    if (a.route.size() >= 2) {
      try {
        const FrenetPath route = build_path(a.route, 0.5);
        if (a.init_s < 0.0 || a.init_s + std::max(0.0, a.s_jitter_hi) > route.length()) {
          fail(base + ".init.s", "outside route length");
        }
      } catch (const Error& e) {
        fail(base + ".route", e.what());
      }
    }
  }
  return diags;
}

std::vector<std::string> validate_scenario_file(const std::string& file) {
  Scenario sc;
  try {
    sc = load_scenario(file);
  } catch (const Error& e) {
    return {e.what()};
  }
  return validate_scenario(sc);
}

}  // namespace mpqp
