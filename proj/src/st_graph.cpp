#include "mpqp/st_graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mpqp/errors.hpp"
#include "mpqp/parallel.hpp"

namespace mpqp {

AgentState AgentPrediction::state_at(double t) const {
  if (states.empty()) return {};
  if (t <= states.front().t) return {t, states.front().position, states.front().heading};
  if (t >= states.back().t) return {t, states.back().position, states.back().heading};
  auto it = std::upper_bound(states.begin(), states.end(), t,
                             [](double v, const AgentState& s) { return v < s.t; });
  const AgentState& b = *it;
  const AgentState& a = *(it - 1);
  const double span = b.t - a.t;
  const double u = span > 0.0 ? (t - a.t) / span : 0.0;
  AgentState out;
  out.t = t;
  out.position = a.position + (b.position - a.position) * u;
  out.heading = a.heading + wrap_angle(b.heading - a.heading) * u;
  return out;
}

OrientedBox AgentPrediction::footprint_at(double t) const {
  const AgentState s = state_at(t);
  OrientedBox box;
  box.center = s.position;
  box.heading = s.heading;
  box.half_length = 0.5 * length + margin;
  box.half_width = 0.5 * width + margin;
  return box;
}

std::string AgentPrediction::validate() const {
  if (length <= 0.0 || width <= 0.0) return "footprint dimensions must be positive";
  if (margin < 0.0) return "margin must be non-negative";
  if (states.empty()) return "prediction has no states";
  if (states.front().t > 0.0) return "first prediction timestamp must be <= 0";
  for (std::size_t i = 1; i < states.size(); ++i) {
    if (states[i].t <= states[i - 1].t) return "prediction timestamps must be strictly increasing";
  }
  return {};
}

namespace {

struct RawInterval {
  double s_min, s_max;
};

// Station-interval extraction for one agent at one footprint pose.
// A station s is blocked when dist(P(s), box) <= reach; edges of each
// blocked run are refined by bisection on that predicate.
std::vector<RawInterval> sweep_station_intervals(const FrenetPath& path, const OrientedBox& box,
                                                 double reach) {
  std::vector<RawInterval> out;
  const std::size_t n = path.size();
  const double coarse = reach + std::hypot(box.half_length, box.half_width) + path.ds;

  auto blocked = [&](double s) { return box.distance_to(path.position_at(s)) <= reach; };

  bool in_run = false;
  double run_start = 0.0;
  std::size_t i = 0;
  while (i < n) {
    // Cheap coarse rejection against the box center.
    const double center_dist = (path.points[i] - box.center).norm();
    bool occ = center_dist <= coarse && blocked(path.stations[i]);
    if (occ && !in_run) {
      in_run = true;
      double lo = path.stations[i];
      if (i > 0) {
        // refine edge within (stations[i-1], stations[i])
        double a = path.stations[i - 1], b = path.stations[i];
        for (int k = 0; k < 40; ++k) {
          const double m = 0.5 * (a + b);
          (blocked(m) ? b : a) = m;
        }
        lo = b;
      }
      run_start = lo;
    } else if (!occ && in_run) {
      in_run = false;
      double a = path.stations[i - 1], b = path.stations[i];
      for (int k = 0; k < 40; ++k) {
        const double m = 0.5 * (a + b);
        (blocked(m) ? a : b) = m;
      }
      out.push_back({run_start, a});
    }
    ++i;
  }
  if (in_run) out.push_back({run_start, path.stations[n - 1]});
  return out;
}

}  // namespace

STGraph build_st_graph(const FrenetPath& path, const std::vector<AgentPrediction>& agents,
                       double ego_halfwidth, double dt, int n_steps, double s_max_bound,
                       const StGraphOptions& options) {
  if (dt <= 0.0 || n_steps < 2) throw DimensionMismatch("build_st_graph: dt > 0 and n_steps >= 2 required");

  STGraph graph;
  graph.dt = dt;
  graph.n_steps = n_steps;
  graph.s_max_bound = s_max_bound;
  graph.occupied.assign(n_steps, {});

  std::vector<std::vector<OccupiedInterval>> per_agent(agents.size());
  parallel_for(
      agents.size(),
      [&](std::size_t ai) {
        const AgentPrediction& agent = agents[ai];
        std::vector<OccupiedInterval>& rows = per_agent[ai];
        for (int k = 0; k < n_steps; ++k) {
          const OrientedBox box = agent.footprint_at(k * dt);
          for (const RawInterval& r : sweep_station_intervals(path, box, ego_halfwidth)) {
            const double lo = std::max(0.0, r.s_min);
            const double hi = std::min(s_max_bound, r.s_max);
            if (lo >= hi) continue;
            const int k0 = std::max(0, k - options.lead_shift_steps);
            const int k1 = std::min(n_steps - 1, k + options.trail_shift_steps);
            for (int kk = k0; kk <= k1; ++kk) {
              rows.push_back({kk, lo, hi, agent.agent_id});
            }
          }
        }
      },
      options.jobs);

  // Deterministic merge regardless of extraction order.
  for (std::size_t ai = 0; ai < agents.size(); ++ai) {
    for (OccupiedInterval& iv : per_agent[ai]) {
      graph.occupied[iv.t_index].push_back(std::move(iv));
    }
  }
  for (auto& step : graph.occupied) {
    std::sort(step.begin(), step.end(), [](const OccupiedInterval& a, const OccupiedInterval& b) {
      if (a.agent_id != b.agent_id) return a.agent_id < b.agent_id;
      if (a.s_min != b.s_min) return a.s_min < b.s_min;
      return a.s_max < b.s_max;
    });
  }
  return graph;
}

std::string dump_st_graph(const STGraph& graph) {
  std::string out = "# t_index s_min s_max agent_id\n";
  char buf[160];
  for (const auto& step : graph.occupied) {
    for (const OccupiedInterval& iv : step) {
      std::snprintf(buf, sizeof(buf), "%d %.9g %.9g %s\n", iv.t_index, iv.s_min, iv.s_max,
                    iv.agent_id.c_str());
      out += buf;
    }
  }
  return out;
}

}  // namespace mpqp
