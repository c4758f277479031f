#include "mpqp/planner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "mpqp/cell_planner.hpp"
#include "mpqp/errors.hpp"
#include "mpqp/parallel.hpp"
#include "mpqp/speed_limits.hpp"

namespace mpqp {

namespace {

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

}  // namespace

int PlannerConfig::steps() const {
  const double ratio = horizon / dt;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    throw DimensionMismatch("PlannerConfig: horizon must be an integer multiple of dt");
  }
  return static_cast<int>(rounded);
}

double PlannerConfig::effective_sweep() const {
  if (sweep_radius > 0.0) return sweep_radius;
  return 0.5 * std::hypot(ego_length, ego_width);
}

Planner::Planner(PlannerConfig config) : config_(std::move(config)) {
  if (!config_.limits.valid()) throw DimensionMismatch("Planner: invalid kinematic limits");
  config_.steps();  // validate horizon/dt
}

SpeedPlan Planner::fallback_plan(double v0, double a0) const {
  const int N = config_.steps();
  const double dt = config_.dt;
  const KinematicLimits& lim = config_.limits;
  const double target_a = std::max(lim.a_min, -std::abs(config_.fallback_decel));

  SpeedPlan plan;
  plan.status = SolveStatus::kSolved;
  plan.cost = std::numeric_limits<double>::infinity();
  plan.profile_id = 0;
  plan.p = Eigen::VectorXd::Zero(N + 1);
  plan.v = Eigen::VectorXd::Zero(N);
  plan.a = Eigen::VectorXd::Zero(N - 1);
  plan.j = Eigen::VectorXd::Zero(N - 2);
  plan.slack_lb = Eigen::VectorXd::Zero(N + 1);
  plan.slack_ub = Eigen::VectorXd::Zero(N + 1);

  double v = std::clamp(v0, 0.0, lim.v_max);
  double a = (v <= 0.0) ? 0.0 : std::clamp(a0, lim.a_min, lim.a_max);
  double p = 0.0;
  for (int t = 0; t < N; ++t) {
    if (t <= N - 2) plan.a(t) = a;
    plan.v(t) = v;
    plan.p(t) = p;
    p += v * dt;

    double a_des;
    if (v <= 1e-9) {
      a_des = 0.0;
    } else if (v <= 0.5 * a * a / lim.j_max) {
      // close to the stop: ramp the deceleration out so v settles at zero
      a_des = 0.0;
    } else {
      a_des = target_a;
    }
    double jerk = std::clamp((a_des - a) / dt, lim.j_min, lim.j_max);
    double a_next = a + jerk * dt;
    double v_next = v + a * dt;
    if (v_next < 0.0) {
      v_next = 0.0;
      a_next = 0.0;
      jerk = std::clamp((a_next - a) / dt, lim.j_min, lim.j_max);
    }
    if (t <= N - 3) plan.j(t) = jerk;
    a = a_next;
    v = v_next;
  }
  plan.p(N) = p;
  return plan;
}

PlanResult Planner::plan(const FrenetPath& path, double s0, double v0, double a0,
                         const std::vector<AgentPrediction>& agents) {
  PlanResult result;
  const double t_start = now_ms();
  const int N = config_.steps();
  const int n_samples = N + 1;

  const double s_bound =
      std::min(path.length(), s0 + config_.limits.v_max * config_.horizon + config_.s_bound_slack);

  StGraphOptions st_opts;
  st_opts.lead_shift_steps = config_.lead_shift_steps;
  st_opts.trail_shift_steps = config_.trail_shift_steps;
  st_opts.jobs = config_.jobs;

  double t0 = now_ms();
  result.st_graph = build_st_graph(path, agents, config_.effective_sweep(), config_.dt, n_samples,
                                   s_bound, st_opts);
  result.timings.st_graph_ms = now_ms() - t0;

  t0 = now_ms();
  const double min_gap = config_.ego_length + config_.min_gap_extra;
  const std::vector<CellLayer> layers = build_layers(result.st_graph, min_gap, config_.jobs);
  result.timings.cells_ms = now_ms() - t0;

  const double root_tol = config_.soft ? std::max(config_.slack_cap_lb, config_.slack_cap_ub) : 0.0;
  const double relax_lb = config_.soft ? config_.slack_cap_lb : 0.0;
  const double relax_ub = config_.soft ? config_.slack_cap_ub : 0.0;

  std::vector<Profile> profiles;
  t0 = now_ms();
  try {
    profiles = enumerate_profiles(layers, s0, config_.max_profiles, root_tol);
  } catch (const NoTraversablePath&) {
    profiles.clear();
  }
  result.timings.search_ms = now_ms() - t0;
  result.profiles_found = static_cast<int>(profiles.size());

  t0 = now_ms();
  profiles = kinematic_post_filter(profiles, s0, v0, a0, config_.limits, config_.dt, relax_lb,
                                   relax_ub, config_.jobs);
  result.timings.filter_ms = now_ms() - t0;
  result.profiles_after_filter = static_cast<int>(profiles.size());

  if (profiles.empty()) {
    result.best = fallback_plan(v0, a0);
    // fallback positions are relative; shift to the current station
    result.best.p.array() += s0;
    result.used_fallback = true;
    result.timings.total_ms = now_ms() - t_start;
    return result;
  }

  const std::vector<double> v_s = curvature_speed_limit(path, config_.a_lat, config_.limits.v_max);
  const SpeedBound bound =
      build_funnel(path, s0, v_s, config_.lookahead, config_.limits.a_min, config_.limits.v_max,
                   config_.dt, n_samples, std::max(v0, 1.0), config_.funnel_release);

  t0 = now_ms();
  WarmStart warm;
  const WarmStart* warm_ptr = nullptr;
  if (has_warm_ && warm_z_.size() == N - 1) {
    warm.z = warm_z_;
    warm_ptr = &warm;
  }

  std::vector<SpeedPlan> plans(profiles.size());
  const AdmmSpeedQp backend;
  parallel_for(
      profiles.size(),
      [&](std::size_t i) {
        QpProblem prob = build_problem(profiles[i], bound, config_.limits, config_.dt, s0, v0, a0,
                                       config_.weights, config_.soft, config_.slack_cap_lb,
                                       config_.slack_cap_ub);
        plans[i] = backend.solve(prob, warm_ptr);
      },
      config_.jobs);
  result.timings.qp_ms = now_ms() - t0;

  int best_idx = -1;
  for (std::size_t i = 0; i < plans.size(); ++i) {
    result.all_plans.push_back({profiles[i].id, plans[i].cost, plans[i].status});
    if (plans[i].status != SolveStatus::kSolved) continue;
    if (best_idx < 0) {
      best_idx = static_cast<int>(i);
      continue;
    }
    const SpeedPlan& cur = plans[best_idx];
    const SpeedPlan& cand = plans[i];
    const int Ncur = static_cast<int>(cur.p.size()) - 1;
    bool better = false;
    if (cand.cost < cur.cost) {
      better = true;
    } else if (cand.cost == cur.cost) {
      if (cand.p(Ncur) > cur.p(Ncur)) {
        better = true;
      } else if (cand.p(Ncur) == cur.p(Ncur) && cand.profile_id < cur.profile_id) {
        better = true;
      }
    }
    if (better) best_idx = static_cast<int>(i);
  }

  if (best_idx < 0) {
    result.best = fallback_plan(v0, a0);
    result.best.p.array() += s0;
    result.used_fallback = true;
  } else {
    result.best = plans[best_idx];
    // seed the next cycle: shift the control sequence one step
    const Eigen::VectorXd& j = result.best.j;
    Eigen::VectorXd z(N - 1);
    z(0) = result.best.a.size() > 1 ? result.best.a(1) : 0.0;
    for (int t = 0; t + 1 < j.size(); ++t) z(1 + t) = j(t + 1);
    if (j.size() >= 1) z(N - 2) = 0.0;
    warm_z_ = z;
    has_warm_ = true;
  }
  result.profiles = std::move(profiles);
  result.timings.total_ms = now_ms() - t_start;
  return result;
}

std::string PlanResult::log_line() const {
  int solved = 0;
  for (const PlanEntry& e : all_plans) {
    if (e.status == SolveStatus::kSolved) ++solved;
  }
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "profiles=%d filtered=%d solved=%d fallback=%d best_cost=%.6g "
                "timings_ms[st=%.2f cells=%.2f search=%.2f filter=%.2f qp=%.2f total=%.2f]",
                profiles_found, profiles_after_filter, solved, used_fallback ? 1 : 0,
                used_fallback ? 0.0 : best.cost, timings.st_graph_ms, timings.cells_ms,
                timings.search_ms, timings.filter_ms, timings.qp_ms, timings.total_ms);
  return buf;
}

std::string dump_plan(const SpeedPlan& plan, double dt) {
  std::string out = "# t p v a j slack_lb slack_ub\n";
  char buf[200];
  const int N = static_cast<int>(plan.p.size()) - 1;
  for (int t = 0; t <= N; ++t) {
    const double v = t < plan.v.size() ? plan.v(t) : 0.0;
    const double a = t < plan.a.size() ? plan.a(t) : 0.0;
    const double j = t < plan.j.size() ? plan.j(t) : 0.0;
    std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g %.9g %.9g %.9g %.9g\n", t * dt, plan.p(t), v,
                  a, j, plan.slack_lb.size() > t ? plan.slack_lb(t) : 0.0,
                  plan.slack_ub.size() > t ? plan.slack_ub(t) : 0.0);
    out += buf;
  }
  return out;
}

}  // namespace mpqp
