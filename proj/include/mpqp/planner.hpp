#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mpqp/frenet_path.hpp"
#include "mpqp/kinematic_limits.hpp"
#include "mpqp/qp_speed.hpp"
#include "mpqp/st_graph.hpp"

namespace mpqp {

struct PlannerConfig {
  double dt = 0.1;
  double horizon = 10.0;  // s; 15 works for high-speed scenes
  KinematicLimits limits;
  QpWeights weights;
  bool soft = true;
  double slack_cap_lb = 2.0;  // m
  double slack_cap_ub = 2.0;  // m

  // ST-graph geometry. sweep_radius <= 0 selects the ego footprint
  // half-diagonal, which keeps the blocked interval a superset of any
  // pose the vehicle can take at a station.
  double ego_length = 4.8;
  double ego_width = 1.9;
  double sweep_radius = -1.0;
  double s_bound_slack = 20.0;  // added beyond v_max * horizon
  int lead_shift_steps = 0;
  int trail_shift_steps = 0;

  double min_gap_extra = 2.0;  // min viable gap = ego_length + this
  int max_profiles = 32;

  // funnel
  double a_lat = 2.0;
  double lookahead = 50.0;
  bool funnel_release = true;

  double fallback_decel = 3.0;  // m/s^2, magnitude

  int jobs = 1;

  int steps() const;            // N = horizon / dt (validated integral)
  double effective_sweep() const;
};

struct PlanEntry {
  std::uint64_t profile_id = 0;
  double cost = 0.0;
  SolveStatus status = SolveStatus::kInfeasible;
};

struct StageTimings {
  double st_graph_ms = 0.0;
  double cells_ms = 0.0;
  double search_ms = 0.0;
  double filter_ms = 0.0;
  double qp_ms = 0.0;
  double total_ms = 0.0;
};

struct PlanResult {
  SpeedPlan best;
  bool used_fallback = false;
  std::vector<PlanEntry> all_plans;  // sorted by profile id
  int profiles_found = 0;
  int profiles_after_filter = 0;
  StageTimings timings;
  STGraph st_graph;                       // retained for dumps
  std::vector<Profile> profiles;          // surviving profiles

  std::string log_line() const;
};

// One full planning cycle: ST graph -> layers -> profile enumeration ->
// kinematic filter -> one QP per profile -> minimum-cost selection.
// Degraded situations (no traversable gap, all solves failed) fall back
// to a jerk-limited stop profile; the result is never absent.
class Planner {
 public:
  explicit Planner(PlannerConfig config);

  PlanResult plan(const FrenetPath& path, double s0, double v0, double a0,
                  const std::vector<AgentPrediction>& agents);

  SpeedPlan fallback_plan(double v0, double a0) const;

  const PlannerConfig& config() const { return config_; }
  void reset_warm_start() { has_warm_ = false; }

 private:
  PlannerConfig config_;
  Eigen::VectorXd warm_z_;
  bool has_warm_ = false;
};

std::string dump_plan(const SpeedPlan& plan, double dt);

}  // namespace mpqp
