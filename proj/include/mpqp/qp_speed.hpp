#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "mpqp/kinematic_limits.hpp"
#include "mpqp/profile_search.hpp"
#include "mpqp/speed_limits.hpp"

namespace mpqp {

struct QpWeights {
  double w_a = 1.0;   // acceleration penalty
  double w_j = 2.0;   // jerk penalty
  double w_f = 0.5;   // terminal-displacement reward
  double w_b = 1e3;   // slack penalty (expanded per step)
};

// Trajectory QP over N integration steps of size dt. The decision
// trajectory stacks p(0..N), v(0..N-1), a(0..N-2), j(0..N-3); p(0) and
// v(0) are pinned to the measured state and a(0) is free. Position bounds
// come from a profile corridor, speed bounds from the funnel, the rest
// from the kinematic boxes. In soft mode the position bounds carry
// capped, penalized slack variables.
struct QpProblem {
  int n_steps = 0;  // N
  double dt = 0.0;
  double p0 = 0.0, v0 = 0.0, a0_hint = 0.0;  // a0_hint is informational only

  Eigen::VectorXd p_lb, p_ub;  // size N+1
  Eigen::VectorXd v_lb, v_ub;  // size N
  Eigen::VectorXd a_lb, a_ub;  // size N-1
  Eigen::VectorXd j_lb, j_ub;  // size N-2

  double w_a = 1.0, w_j = 2.0, w_f = 0.5;
  Eigen::VectorXd w_b;  // size N+1

  bool soft = false;
  Eigen::VectorXd s_cap_lb, s_cap_ub;  // size N+1

  std::uint64_t profile_id = 0;

  // Objective of an explicit trajectory (slack penalty included).
  double objective_value(const Eigen::VectorXd& p, const Eigen::VectorXd& a,
                         const Eigen::VectorXd& j, const Eigen::VectorXd& s_lb,
                         const Eigen::VectorXd& s_ub) const;
};

enum class SolveStatus { kSolved, kInfeasible, kMaxIter };

const char* to_string(SolveStatus status);

struct KktReport {
  bool applicable = false;
  double stationarity = 0.0;
  double primal = 0.0;
  double complementarity = 0.0;
  double dynamics = 0.0;
  bool certified(double tol = 1e-5) const {
    return applicable && stationarity <= tol && primal <= tol && complementarity <= tol &&
           dynamics <= tol;
  }
};

struct SpeedPlan {
  Eigen::VectorXd p, v, a, j;
  Eigen::VectorXd slack_lb, slack_ub;
  double cost = 0.0;
  SolveStatus status = SolveStatus::kInfeasible;
  std::uint64_t profile_id = 0;
  KktReport kkt;
  int iterations = 0;
  bool polished = false;
  Eigen::VectorXd dual;  // per-constraint-row multipliers (solver layout)
};

QpProblem build_problem(const Profile& profile, const SpeedBound& speed_bound,
                        const KinematicLimits& limits, double dt, double p0, double v0, double a0,
                        const QpWeights& weights, bool soft, double slack_cap_lb = 2.0,
                        double slack_cap_ub = 2.0);

struct AdmmSettings {
  double eps_abs = 1e-6;
  double eps_rel = 1e-7;
  int max_iter = 4000;
  double rho0 = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;
  int check_interval = 10;
  int rho_interval = 50;
  bool polish = true;
};

struct WarmStart {
  Eigen::VectorXd z;  // [a0, j(0..N-3)] from a previous cycle
};

// Solver backend interface; the bundled implementation is a first-order
// operator-splitting method on the jerk-reduced problem with an
// active-set polish step.
class SpeedQpBackend {
 public:
  virtual ~SpeedQpBackend() = default;
  virtual SpeedPlan solve(const QpProblem& problem, const WarmStart* warm) const = 0;
};

class AdmmSpeedQp final : public SpeedQpBackend {
 public:
  explicit AdmmSpeedQp(AdmmSettings settings = {}) : settings_(settings) {}
  SpeedPlan solve(const QpProblem& problem, const WarmStart* warm) const override;

 private:
  AdmmSettings settings_;
};

// Solves with the default backend.
SpeedPlan solve(const QpProblem& problem, const WarmStart* warm = nullptr,
                const AdmmSettings& settings = {});

// Residual report for a solved plan; reconstructs the dynamics
// multipliers exactly, so the reported stationarity is the true reduced
// gradient at the returned multipliers.
KktReport verify_kkt(const QpProblem& problem, const SpeedPlan& plan);

}  // namespace mpqp
