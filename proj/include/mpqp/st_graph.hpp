#pragma once

#include <string>
#include <vector>

#include "mpqp/frenet_path.hpp"
#include "mpqp/geometry.hpp"

namespace mpqp {

struct AgentState {
  double t = 0.0;  // s
  Vec2 position;
  double heading = 0.0;  // rad
};

// Predicted motion of one traffic agent. States are interpolated linearly
// in position and shortest-arc in heading; queries outside the covered
// time range hold the nearest endpoint state.
struct AgentPrediction {
  std::string agent_id;
  double length = 0.0;  // footprint, m
  double width = 0.0;   // footprint, m
  double margin = 0.0;  // inflation applied on all sides, m
  std::vector<AgentState> states;

  AgentState state_at(double t) const;
  OrientedBox footprint_at(double t) const;  // inflated by margin

  // Checks invariants (strictly increasing timestamps, first <= 0,
  // positive dimensions). Returns an empty string when valid.
  std::string validate() const;
};

struct OccupiedInterval {
  int t_index = 0;
  double s_min = 0.0;
  double s_max = 0.0;
  std::string agent_id;
};

struct STGraph {
  double dt = 0.0;
  int n_steps = 0;
  double s_max_bound = 0.0;
  // occupied[t] holds this step's intervals sorted by (agent_id, s_min).
  std::vector<std::vector<OccupiedInterval>> occupied;
};

struct StGraphOptions {
  int lead_shift_steps = 0;   // an interval at step k also blocks k-lead..k
  int trail_shift_steps = 0;  // ...and k..k+trail
  int jobs = 1;
};

// Marks, per time step, the station interval(s) where an agent's inflated
// footprint comes within `ego_halfwidth` of the path. Interval edges are
// refined by bisection so they vary smoothly with agent motion, then
// clamped to [0, s_max_bound].
STGraph build_st_graph(const FrenetPath& path, const std::vector<AgentPrediction>& agents,
                       double ego_halfwidth, double dt, int n_steps, double s_max_bound,
                       const StGraphOptions& options = {});

// Text table of (t_index, s_min, s_max, agent_id) rows for plotting.
std::string dump_st_graph(const STGraph& graph);

}  // namespace mpqp
