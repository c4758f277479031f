#include "mpqp/sim/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#include "mpqp/cell_planner.hpp"
#include "mpqp/errors.hpp"
#include "mpqp/parallel.hpp"
#include "mpqp/st_graph.hpp"

namespace mpqp {

const char* to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::kSuccess:
      return "success";
    case Outcome::kCollision:
      return "collision";
    case Outcome::kTimeout:
      return "timeout";
  }
  return "unknown";
}

namespace {

double splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  z = z ^ (z >> 31);
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

struct AgentRuntime {
  double s = 0.0;
  double v = 0.0;
  int dir = 1;           // pedestrians walk back and forth
  bool yielding = false;
  IdmParams idm;
};

double schedule_speed(const AgentSpec& spec, double t) {
  double v = spec.init_speed;
  for (const SpeedSchedulePoint& pt : spec.schedule) {
    if (pt.t <= t) v = pt.speed;
  }
  return v;
}

OrientedBox agent_box(const AgentSpec& spec, const FrenetPath& route, double s) {
  OrientedBox box;
  box.center = route.position_at(s);
  box.heading = route.heading_at(s);
  box.half_length = 0.5 * spec.length;
  box.half_width = 0.5 * spec.width;
  return box;
}

}  // namespace

ScenarioRuntime make_runtime(const Scenario& scenario) {
  ScenarioRuntime rt;
  rt.scenario = scenario;
  rt.ego_path = build_path(scenario.path_waypoints, scenario.path_ds);
  rt.routes.reserve(scenario.agents.size());
  rt.zones.resize(scenario.agents.size());
  rt.route_group.resize(scenario.agents.size());

  for (std::size_t i = 0; i < scenario.agents.size(); ++i) {
    const AgentSpec& spec = scenario.agents[i];
    rt.routes.push_back(build_path(spec.route, 0.5));
    int group = static_cast<int>(i);
    for (std::size_t k = 0; k < i; ++k) {
      if (scenario.agents[k].route == spec.route) {
        group = rt.route_group[k];
        break;
      }
    }
    rt.route_group[i] = group;
  }

  // Conflict zones: contiguous stretches of the agent route that pass
  // within lateral reach of the ego path.
  for (std::size_t i = 0; i < scenario.agents.size(); ++i) {
    const AgentSpec& spec = scenario.agents[i];
    const FrenetPath& route = rt.routes[i];
    const double thr = 0.5 * (spec.width + scenario.ego_width) + 0.3;
    bool in_zone = false;
    ConflictZone zone;
    for (std::size_t k = 0; k < route.size(); ++k) {
      const auto [idx, dist] = rt.ego_path.nearest_station(route.points[k]);
      const double ego_s = rt.ego_path.stations[idx];
      if (dist <= thr) {
        if (!in_zone) {
          in_zone = true;
          zone = ConflictZone{route.stations[k], route.stations[k], ego_s, ego_s};
        } else {
          zone.route_exit = route.stations[k];
          zone.ego_entry = std::min(zone.ego_entry, ego_s);
          zone.ego_exit = std::max(zone.ego_exit, ego_s);
        }
      } else if (in_zone) {
        in_zone = false;
        rt.zones[i].push_back(zone);
      }
    }
    if (in_zone) rt.zones[i].push_back(zone);
  }
  return rt;
}

std::uint64_t episode_seed(std::uint64_t master_seed, int episode_index) {
  std::uint64_t state = master_seed ^ (0xA0761D6478BD642Full * (episode_index + 1));
  splitmix64(state);
  return state;
}

SimResult run_episode(const Scenario& scenario, const PlannerConfig& config, std::uint64_t seed,
                      EpisodeDumps* dumps) {
  return run_episode(make_runtime(scenario), config, seed, dumps);
}

SimResult run_episode(const ScenarioRuntime& rt, const PlannerConfig& config, std::uint64_t seed,
                      EpisodeDumps* dumps) {
  const Scenario& sc = rt.scenario;
  const double dt = config.dt;
  const int horizon_samples = config.steps() + 1;

  SimResult result;
  result.seed = seed;
  result.agent_traces.resize(sc.agents.size());

  std::mt19937_64 rng(seed);
  auto uniform = [&rng](double lo, double hi) {
    if (hi <= lo) return lo;
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };

  std::vector<AgentRuntime> agents(sc.agents.size());
  for (std::size_t i = 0; i < sc.agents.size(); ++i) {
    const AgentSpec& spec = sc.agents[i];
    AgentRuntime& a = agents[i];
    a.s = std::clamp(spec.init_s + uniform(spec.s_jitter_lo, spec.s_jitter_hi), 0.0,
                     rt.routes[i].length());
    a.v = std::max(0.0, spec.init_speed + uniform(spec.speed_jitter_lo, spec.speed_jitter_hi));
    a.idm = spec.idm;
    if (spec.desired_speed_hi > spec.desired_speed_lo) {
      a.idm.desired_speed = uniform(spec.desired_speed_lo, spec.desired_speed_hi);
    }
    a.yielding = std::bernoulli_distribution(spec.yield_probability)(rng);
    if (spec.behavior == AgentBehavior::kPedestrian) a.v = 1.2;
  }

  Planner planner(config);
  double ego_s = sc.ego_s0;
  double ego_v = sc.ego_v0;
  double ego_a_hint = sc.ego_a0;
  double exec_a = sc.ego_a0;
  double exec_j = 0.0;

  const int max_ticks = static_cast<int>(std::ceil(sc.time_limit / dt)) + 1;
  char header[96];

  for (int k = 0; k < max_ticks; ++k) {
    const double t = k * dt;

    // record state at t
    EgoTick tick;
    tick.t = t;
    const Vec2 ego_pos = rt.ego_path.position_at(ego_s);
    tick.x = ego_pos.x;
    tick.y = ego_pos.y;
    tick.s = ego_s;
    tick.v = ego_v;
    tick.a = exec_a;
    tick.j = exec_j;
    tick.lat_acc = ego_v * ego_v * rt.ego_path.curvature_at(ego_s);
    result.ego_trace.push_back(tick);
    for (std::size_t i = 0; i < agents.size(); ++i) {
      const FrenetPath& route = rt.routes[i];
      AgentTick at;
      at.t = t;
      at.position = route.position_at(agents[i].s);
      at.heading = route.heading_at(agents[i].s);
      at.s = agents[i].s;
      at.v = agents[i].v;
      result.agent_traces[i].push_back(at);
    }

    // terminal conditions on the state at t
    OrientedBox ego_box;
    ego_box.center = ego_pos;
    ego_box.heading = rt.ego_path.heading_at(ego_s);
    ego_box.half_length = 0.5 * sc.ego_length;
    ego_box.half_width = 0.5 * sc.ego_width;
    bool collided = false;
    for (std::size_t i = 0; i < agents.size() && !collided; ++i) {
      collided = obb_overlap(ego_box, agent_box(sc.agents[i], rt.routes[i], agents[i].s));
    }
    if (collided) {
      result.outcome = Outcome::kCollision;
      result.duration = t;
      return result;
    }
    if (ego_s >= sc.success_s_min && ego_s <= sc.success_s_max) {
      result.outcome = Outcome::kSuccess;
      result.duration = t;
      return result;
    }
    if (t >= sc.time_limit - 1e-9) {
      result.outcome = Outcome::kTimeout;
      result.duration = t;
      return result;
    }

    // constant-speed predictions along each route
    std::vector<AgentPrediction> predictions(agents.size());
    for (std::size_t i = 0; i < agents.size(); ++i) {
      const AgentSpec& spec = sc.agents[i];
      const FrenetPath& route = rt.routes[i];
      AgentPrediction& pred = predictions[i];
      pred.agent_id = spec.id;
      pred.length = spec.length;
      pred.width = spec.width;
      pred.margin = spec.margin;
      const double v_signed =
          spec.behavior == AgentBehavior::kPedestrian ? agents[i].dir * agents[i].v : agents[i].v;
      pred.states.reserve(horizon_samples);
      for (int step = 0; step < horizon_samples; ++step) {
        const double sp = std::clamp(agents[i].s + v_signed * step * dt, 0.0, route.length());
        pred.states.push_back({step * dt, route.position_at(sp), route.heading_at(sp)});
      }
    }

    const auto plan_start = std::chrono::steady_clock::now();
    PlanResult plan = planner.plan(rt.ego_path, ego_s, ego_v, ego_a_hint, predictions);
    const double plan_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - plan_start)
            .count();
    result.plan_ms.push_back(plan_ms);
    result.cycle_log.push_back(plan.log_line());

    if (dumps) {
      std::snprintf(header, sizeof(header), "# cycle %d t=%.9g\n", k, t);
      if (dumps->want_st_graph) {
        dumps->st_graph += header;
        dumps->st_graph += dump_st_graph(plan.st_graph);
      }
      if (dumps->want_profiles) {
        dumps->profiles += header;
        dumps->profiles += dump_profiles(plan.profiles);
      }
      if (dumps->want_plans) {
        dumps->plans += header;
        dumps->plans += dump_plan(plan.best, dt);
      }
    }

    // execute the first plan step
    exec_a = plan.best.a(0);
    exec_j = plan.best.j(0);
    ego_s = plan.best.p(1);
    ego_v = plan.best.v(1);
    ego_a_hint = plan.best.a.size() > 1 ? plan.best.a(1) : 0.0;

    // advance traffic from the same snapshot
    std::vector<double> new_s(agents.size()), new_v(agents.size());
    for (std::size_t i = 0; i < agents.size(); ++i) {
      const AgentSpec& spec = sc.agents[i];
      const FrenetPath& route = rt.routes[i];
      AgentRuntime& a = agents[i];
      double s_next = a.s;
      double v_next = a.v;
      switch (spec.behavior) {
        case AgentBehavior::kScripted: {
          v_next = std::max(0.0, schedule_speed(spec, t));
          s_next = std::min(a.s + v_next * dt, route.length());
          break;
        }
        case AgentBehavior::kPedestrian: {
          // direction flip with seeded probability flip_rate * dt
          if (std::bernoulli_distribution(std::min(1.0, spec.walk_flip_rate * dt))(rng)) {
            a.dir = -a.dir;
          }
          s_next = a.s + a.dir * a.v * dt;
          if (s_next <= 0.0) {
            s_next = 0.0;
            a.dir = 1;
          } else if (s_next >= route.length()) {
            s_next = route.length();
            a.dir = -1;
          }
          v_next = a.v;
          break;
        }
        case AgentBehavior::kIdm: {
          double gap = kNoLeaderGap;
          double lead_v = 0.0;
          for (std::size_t other = 0; other < agents.size(); ++other) {
            if (other == i || rt.route_group[other] != rt.route_group[i]) continue;
            if (agents[other].s <= a.s) continue;
            const double g =
                agents[other].s - a.s - 0.5 * (spec.length + sc.agents[other].length);
            if (g < gap) {
              gap = g;
              lead_v = agents[other].v;
            }
          }
          if (a.yielding) {
            bool ego_on_route = false;
            try {
              const FrenetPath::Projection proj = route.project(ego_pos, 2.5);
              if (proj.s > a.s) {
                const double g = proj.s - a.s - 0.5 * (spec.length + sc.ego_length);
                if (g < gap) {
                  gap = g;
                  lead_v = ego_v;
                }
                ego_on_route = true;
              }
            } catch (const OutOfCorridor&) {
            }
            if (!ego_on_route) {
              for (const ConflictZone& zone : rt.zones[i]) {
                if (a.s > zone.route_exit) continue;
                const bool ego_cleared = ego_s > zone.ego_exit + 0.5 * sc.ego_length + 1.0;
                const bool ego_engaged = ego_s > zone.ego_entry - 40.0;
                if (!ego_cleared && ego_engaged) {
                  const double g = zone.route_entry - 1.5 - a.s - 0.5 * spec.length;
                  if (g < gap) {
                    gap = g;
                    lead_v = 0.0;
                  }
                }
                break;  // only the next zone matters
              }
            }
          }
          const double acc = step_idm(a.v, gap, lead_v, a.idm);
          s_next = std::min(a.s + a.v * dt, route.length());
          v_next = std::max(0.0, a.v + acc * dt);
          break;
        }
      }
      new_s[i] = s_next;
      new_v[i] = v_next;
    }
    for (std::size_t i = 0; i < agents.size(); ++i) {
      agents[i].s = new_s[i];
      agents[i].v = new_v[i];
    }
  }

  result.outcome = Outcome::kTimeout;
  result.duration = sc.time_limit;
  return result;
}

std::vector<SimResult> run_batch(const ScenarioRuntime& runtime, const PlannerConfig& config,
                                 int runs, std::uint64_t master_seed, int jobs) {
  std::vector<SimResult> results(runs);
  PlannerConfig episode_config = config;
  episode_config.jobs = 1;  // parallelism lives at the episode level
  parallel_for(
      static_cast<std::size_t>(runs),
      [&](std::size_t i) {
        results[i] =
            run_episode(runtime, episode_config, episode_seed(master_seed, static_cast<int>(i)));
      },
      jobs);
  return results;
}

std::string dump_trace(const SimResult& result) {
  std::string out = "# t x y s v a j lat_acc\n";
  char buf[220];
  for (const EgoTick& e : result.ego_trace) {
    std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g %.9g %.9g %.9g %.9g %.9g\n", e.t, e.x, e.y,
                  e.s, e.v, e.a, e.j, e.lat_acc);
    out += buf;
  }
  out += "# agent traces: t x y heading s v\n";
  for (std::size_t i = 0; i < result.agent_traces.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "# agent %zu\n", i);
    out += buf;
    for (const AgentTick& a : result.agent_traces[i]) {
      std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g %.9g %.9g %.9g\n", a.t, a.position.x,
                    a.position.y, a.heading, a.s, a.v);
      out += buf;
    }
  }
  return out;
}

}  // namespace mpqp
