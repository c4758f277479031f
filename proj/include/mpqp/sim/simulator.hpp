#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mpqp/frenet_path.hpp"
#include "mpqp/planner.hpp"
#include "mpqp/sim/scenario.hpp"

namespace mpqp {

enum class Outcome { kSuccess, kCollision, kTimeout };

const char* to_string(Outcome outcome);

struct EgoTick {
  double t = 0.0;
  double x = 0.0, y = 0.0;
  double s = 0.0, v = 0.0, a = 0.0, j = 0.0;
  double lat_acc = 0.0;  // v^2 * curvature at s
};

struct AgentTick {
  double t = 0.0;
  Vec2 position;
  double heading = 0.0;
  double s = 0.0, v = 0.0;
};

struct SimResult {
  Outcome outcome = Outcome::kTimeout;
  double duration = 0.0;
  std::uint64_t seed = 0;
  std::vector<EgoTick> ego_trace;
  std::vector<std::vector<AgentTick>> agent_traces;
  std::vector<double> plan_ms;       // one entry per planning cycle
  std::vector<std::string> cycle_log;
};

// Optional per-cycle artifact capture for the CLI dump flags.
struct EpisodeDumps {
  bool want_st_graph = false;
  bool want_profiles = false;
  bool want_plans = false;
  std::string st_graph;
  std::string profiles;
  std::string plans;
};

// Precomputed immutable scenario geometry shared across a batch.
struct ConflictZone {
  double route_entry = 0.0, route_exit = 0.0;  // stations on the agent route
  double ego_entry = 0.0, ego_exit = 0.0;      // stations on the ego path
};

struct ScenarioRuntime {
  Scenario scenario;
  FrenetPath ego_path;
  std::vector<FrenetPath> routes;                 // per agent
  std::vector<std::vector<ConflictZone>> zones;   // per agent
  std::vector<int> route_group;                   // agents sharing a route
};

ScenarioRuntime make_runtime(const Scenario& scenario);

std::uint64_t episode_seed(std::uint64_t master_seed, int episode_index);

// Closed-loop episode: seeded initialization, constant-speed predictions,
// one planning cycle per tick, behavior-model traffic. Deterministic in
// (scenario, config, seed).
SimResult run_episode(const ScenarioRuntime& runtime, const PlannerConfig& config,
                      std::uint64_t seed, EpisodeDumps* dumps = nullptr);

SimResult run_episode(const Scenario& scenario, const PlannerConfig& config, std::uint64_t seed,
                      EpisodeDumps* dumps = nullptr);

// Episodes 0..runs-1 with per-episode seeds derived from the master seed;
// episodes run concurrently, results are returned in episode order.
std::vector<SimResult> run_batch(const ScenarioRuntime& runtime, const PlannerConfig& config,
                                 int runs, std::uint64_t master_seed, int jobs = 1);

// Per-tick trace in the plan-dump row format plus Cartesian columns.
std::string dump_trace(const SimResult& result);

}  // namespace mpqp
