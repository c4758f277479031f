#include "mpqp/qp_speed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "mpqp/errors.hpp"

namespace mpqp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Constraint-row layout shared by the solver and the residual checks.
// Hard mode drops the constant position rows t=0,1 (p(0), p(1) are fully
// determined by the pinned initial state).
struct RowLayout {
  int N = 0;
  bool soft = false;
  int p_start = 0;
  int off_plo = 0, off_pup = 0, off_v = 0, off_a = 0, off_j = 0, off_slb = -1, off_sub = -1;
  int m = 0;
};

RowLayout make_layout(int N, bool soft) {
  RowLayout lay;
  lay.N = N;
  lay.soft = soft;
  lay.p_start = soft ? 0 : 2;
  const int n_p = N + 1 - lay.p_start;
  lay.off_plo = 0;
  lay.off_pup = n_p;
  lay.off_v = 2 * n_p;
  lay.off_a = lay.off_v + (N - 1);
  lay.off_j = lay.off_a + (N - 1);
  lay.m = lay.off_j + (N - 2);
  if (soft) {
    lay.off_slb = lay.m;
    lay.off_sub = lay.m + (N + 1);
    lay.m += 2 * (N + 1);
  }
  return lay;
}

// Reduced formulation: with p(0), v(0) pinned and the integrator chain
// eliminated, the free variable is z = [a(0), j(0..N-3)]. Positions,
// speeds and accelerations are affine in z; every bound becomes a row
// l <= az'z (+ slack) <= u. Rows are normalized to unit inf-norm and the
// objective is scaled once; the splitting iteration then works on
//   minimize 1/2 x'Px + q'x  subject to  l <= Ax <= u,  x = [z; s].
struct Structure {
  int N = 0, nz = 0, ns = 0, nx = 0, m = 0;
  bool soft = false;

  MatrixXd Ga, Gv, Gp;  // chain maps z -> a (N-1), v (N), p (N+1)
  VectorXd cp;          // constant part of p(t)

  MatrixXd Pzz;  // unscaled reduced Hessian
  VectorXd qz;   // unscaled reduced gradient
  double cost_const = 0.0;

  MatrixXd Az;                // scaled z-part of every row
  std::vector<int> s_index;   // per row: slack variable index or -1
  VectorXd s_coeff;           // per row: scaled slack coefficient
  VectorXd row_scale;         // e_i
  VectorXd lo, up;            // scaled bounds
  VectorXd lo_raw, up_raw;    // unscaled bounds
  double cost_scale = 1.0;

  int off_plo = 0, off_pup = 0, off_v = 0, off_a = 0, off_j = 0, off_slb = -1, off_sub = -1;
  int p_start = 0;  // first position index carried as a row (2 in hard mode)

  int n_plo() const { return N + 1 - p_start; }
};

Structure build_structure(const QpProblem& prob) {
  const int N = prob.n_steps;
  const double dt = prob.dt;
  Structure st;
  st.N = N;
  st.nz = N - 1;
  st.soft = prob.soft;
  st.ns = prob.soft ? 2 * (N + 1) : 0;
  st.nx = st.nz + st.ns;
  st.p_start = prob.soft ? 0 : 2;

  st.Ga = MatrixXd::Zero(N - 1, st.nz);
  for (int t = 0; t < N - 1; ++t) {
    st.Ga(t, 0) = 1.0;
    for (int k = 0; k < t; ++k) st.Ga(t, 1 + k) = dt;
  }
  st.Gv = MatrixXd::Zero(N, st.nz);
  for (int t = 1; t < N; ++t) st.Gv.row(t) = st.Gv.row(t - 1) + dt * st.Ga.row(t - 1);
  st.Gp = MatrixXd::Zero(N + 1, st.nz);
  for (int t = 1; t <= N; ++t) st.Gp.row(t) = st.Gp.row(t - 1) + dt * st.Gv.row(t - 1);
  st.cp = VectorXd::Zero(N + 1);
  for (int t = 0; t <= N; ++t) st.cp(t) = prob.p0 + t * dt * prob.v0;

  st.Pzz = prob.w_a * (st.Ga.transpose() * st.Ga);
  for (int i = 1; i < st.nz; ++i) st.Pzz(i, i) += prob.w_j;
  st.qz = -prob.w_f * st.Gp.row(N).transpose();
  st.cost_const = -prob.w_f * st.cp(N);

  const RowLayout lay = make_layout(N, prob.soft);
  st.off_plo = lay.off_plo;
  st.off_pup = lay.off_pup;
  st.off_v = lay.off_v;
  st.off_a = lay.off_a;
  st.off_j = lay.off_j;
  st.off_slb = lay.off_slb;
  st.off_sub = lay.off_sub;
  st.m = lay.m;

  st.Az = MatrixXd::Zero(st.m, st.nz);
  st.s_index.assign(st.m, -1);
  st.s_coeff = VectorXd::Zero(st.m);
  st.row_scale = VectorXd::Ones(st.m);
  st.lo = VectorXd::Constant(st.m, -kInf);
  st.up = VectorXd::Constant(st.m, kInf);

  auto set_row = [&](int row, const Eigen::RowVectorXd& az, int sidx, double scoeff, double lo,
                     double up) {
    double norm = az.cwiseAbs().maxCoeff();
    if (sidx >= 0) norm = std::max(norm, std::abs(scoeff));
    const double e = 1.0 / std::max(norm, 1e-10);
    st.Az.row(row) = e * az;
    st.s_index[row] = sidx;
    st.s_coeff(row) = e * scoeff;
    st.row_scale(row) = e;
    st.lo(row) = std::isfinite(lo) ? e * lo : -kInf;
    st.up(row) = std::isfinite(up) ? e * up : kInf;
  };

  for (int t = st.p_start; t <= N; ++t) {
    const int r = st.off_plo + (t - st.p_start);
    if (prob.soft) {
      set_row(r, st.Gp.row(t), t, 1.0, prob.p_lb(t) - st.cp(t), kInf);
    } else {
      set_row(r, st.Gp.row(t), -1, 0.0, prob.p_lb(t) - st.cp(t), kInf);
    }
  }
  for (int t = st.p_start; t <= N; ++t) {
    const int r = st.off_pup + (t - st.p_start);
    if (prob.soft) {
      set_row(r, st.Gp.row(t), (N + 1) + t, -1.0, -kInf, prob.p_ub(t) - st.cp(t));
    } else {
      set_row(r, st.Gp.row(t), -1, 0.0, -kInf, prob.p_ub(t) - st.cp(t));
    }
  }
  for (int t = 1; t <= N - 1; ++t) {
    set_row(st.off_v + (t - 1), st.Gv.row(t), -1, 0.0, prob.v_lb(t) - prob.v0,
            prob.v_ub(t) - prob.v0);
  }
  for (int t = 0; t <= N - 2; ++t) {
    set_row(st.off_a + t, st.Ga.row(t), -1, 0.0, prob.a_lb(t), prob.a_ub(t));
  }
  for (int t = 0; t <= N - 3; ++t) {
    Eigen::RowVectorXd unit = Eigen::RowVectorXd::Zero(st.nz);
    unit(1 + t) = 1.0;
    set_row(st.off_j + t, unit, -1, 0.0, prob.j_lb(t), prob.j_ub(t));
  }
  if (prob.soft) {
    const Eigen::RowVectorXd zero = Eigen::RowVectorXd::Zero(st.nz);
    for (int t = 0; t <= N; ++t) {
      set_row(st.off_slb + t, zero, t, 1.0, 0.0, prob.s_cap_lb(t));
      set_row(st.off_sub + t, zero, (N + 1) + t, 1.0, 0.0, prob.s_cap_ub(t));
    }
  }

  st.lo_raw = st.lo.cwiseQuotient(st.row_scale);
  st.up_raw = st.up.cwiseQuotient(st.row_scale);
  for (int i = 0; i < st.m; ++i) {
    if (!std::isfinite(st.lo(i))) st.lo_raw(i) = -kInf;
    if (!std::isfinite(st.up(i))) st.up_raw(i) = kInf;
  }

  double obj_norm = std::max(st.Pzz.cwiseAbs().maxCoeff(), st.qz.cwiseAbs().maxCoeff());
  if (prob.soft) obj_norm = std::max(obj_norm, prob.w_b.cwiseAbs().maxCoeff());
  st.cost_scale = 1.0 / std::max(1.0, obj_norm);
  return st;
}

VectorXd scaled_gradient(const Structure& st, const QpProblem& prob) {
  VectorXd q = VectorXd::Zero(st.nx);
  q.head(st.nz) = st.cost_scale * st.qz;
  if (st.soft) {
    for (int t = 0; t <= st.N; ++t) {
      q(st.nz + t) = st.cost_scale * prob.w_b(t);
      q(st.nz + (st.N + 1) + t) = st.cost_scale * prob.w_b(t);
    }
  }
  return q;
}

void apply_A(const Structure& st, const VectorXd& x, VectorXd& out) {
  out.noalias() = st.Az * x.head(st.nz);
  for (int i = 0; i < st.m; ++i) {
    if (st.s_index[i] >= 0) out(i) += st.s_coeff(i) * x(st.nz + st.s_index[i]);
  }
}

void apply_At(const Structure& st, const VectorXd& y, VectorXd& out) {
  out.head(st.nz).noalias() = st.Az.transpose() * y;
  out.tail(st.ns).setZero();
  for (int i = 0; i < st.m; ++i) {
    if (st.s_index[i] >= 0) out(st.nz + st.s_index[i]) += st.s_coeff(i) * y(i);
  }
}

// P x (scaled objective) on the stacked variable.
void apply_P(const Structure& st, const VectorXd& x, VectorXd& out) {
  out.head(st.nz).noalias() = st.cost_scale * (st.Pzz * x.head(st.nz));
  out.tail(st.ns).setZero();
}

// Factorization of (P + sigma I + rho A'A). The slack block is diagonal,
// so only its Schur complement in the z block is factorized.
struct KktFactor {
  double rho = 0.0, sigma = 0.0;
  Eigen::LLT<MatrixXd> llt;
  VectorXd ms;         // per slack variable: sigma + rho * (coupling)
  VectorXd cross_val;  // per row touching a slack: rho * az_scale products
  bool ok = false;
};

KktFactor factorize(const Structure& st, double rho, double sigma) {
  KktFactor f;
  f.rho = rho;
  f.sigma = sigma;
  MatrixXd S = st.cost_scale * st.Pzz;
  S.diagonal().array() += sigma;
  S.noalias() += rho * (st.Az.transpose() * st.Az);

  if (st.soft) {
    f.ms = VectorXd::Constant(st.ns, sigma);
    for (int i = 0; i < st.m; ++i) {
      const int s = st.s_index[i];
      if (s >= 0) f.ms(s) += rho * st.s_coeff(i) * st.s_coeff(i);
    }
    // Schur correction: rows coupling z and a slack variable.
    for (int i = 0; i < st.m; ++i) {
      const int s = st.s_index[i];
      if (s < 0) continue;
      if (st.Az.row(i).cwiseAbs().maxCoeff() == 0.0) continue;
      const VectorXd col = rho * st.s_coeff(i) * st.Az.row(i).transpose();  // M_{z,s} column
      S.noalias() -= (1.0 / f.ms(s)) * (col * col.transpose());
    }
  }
  f.llt.compute(S);
  f.ok = f.llt.info() == Eigen::Success;
  return f;
}

void kkt_solve(const Structure& st, const KktFactor& f, const VectorXd& rhs, VectorXd& x) {
  if (!st.soft) {
    x = f.llt.solve(rhs);
    return;
  }
  // eliminate the slack block, solve for z, then back-substitute
  VectorXd rz = rhs.head(st.nz);
  for (int i = 0; i < st.m; ++i) {
    const int s = st.s_index[i];
    if (s < 0) continue;
    if (st.Az.row(i).cwiseAbs().maxCoeff() == 0.0) continue;
    const double factor = f.rho * st.s_coeff(i) / f.ms(s);
    rz.noalias() -= factor * rhs(st.nz + s) * st.Az.row(i).transpose();
  }
  x.resize(st.nx);
  x.head(st.nz) = f.llt.solve(rz);
  VectorXd s_sol = rhs.tail(st.ns);
  for (int i = 0; i < st.m; ++i) {
    const int s = st.s_index[i];
    if (s < 0) continue;
    if (st.Az.row(i).cwiseAbs().maxCoeff() == 0.0) continue;
    s_sol(s) -= f.rho * st.s_coeff(i) * st.Az.row(i).dot(x.head(st.nz));
  }
  x.tail(st.ns) = s_sol.cwiseQuotient(f.ms);
}

// Integrates the chain; exact by construction.
void expand_plan(const QpProblem& prob, const VectorXd& z, SpeedPlan& plan) {
  const int N = prob.n_steps;
  const double dt = prob.dt;
  plan.p.resize(N + 1);
  plan.v.resize(N);
  plan.a.resize(N - 1);
  plan.j.resize(N - 2);
  plan.a(0) = z(0);
  for (int t = 0; t < N - 2; ++t) {
    plan.j(t) = z(1 + t);
    plan.a(t + 1) = plan.a(t) + plan.j(t) * dt;
  }
  plan.v(0) = prob.v0;
  for (int t = 1; t < N; ++t) plan.v(t) = plan.v(t - 1) + plan.a(t - 1) * dt;
  plan.p(0) = prob.p0;
  for (int t = 1; t <= N; ++t) plan.p(t) = plan.p(t - 1) + plan.v(t - 1) * dt;
}

SpeedPlan make_plan(const QpProblem& prob, const VectorXd& x, SolveStatus status, int iters,
                    const Structure& st, const VectorXd& y_rows_unscaled, bool polished) {
  SpeedPlan plan;
  plan.status = status;
  plan.iterations = iters;
  plan.profile_id = prob.profile_id;
  plan.polished = polished;
  expand_plan(prob, x.head(st.nz), plan);
  const int N = prob.n_steps;
  plan.slack_lb = VectorXd::Zero(N + 1);
  plan.slack_ub = VectorXd::Zero(N + 1);
  if (prob.soft) {
    plan.slack_lb = x.segment(st.nz, N + 1);
    plan.slack_ub = x.segment(st.nz + N + 1, N + 1);
  }
  plan.cost = prob.objective_value(plan.p, plan.a, plan.j, plan.slack_lb, plan.slack_ub);
  plan.dual = y_rows_unscaled;
  plan.kkt = verify_kkt(prob, plan);
  return plan;
}

SpeedPlan infeasible_plan(const QpProblem& prob) {
  SpeedPlan plan;
  plan.status = SolveStatus::kInfeasible;
  plan.profile_id = prob.profile_id;
  plan.cost = kInf;
  const int N = prob.n_steps;
  plan.p = VectorXd::Zero(N + 1);
  plan.v = VectorXd::Zero(N);
  plan.a = VectorXd::Zero(N - 1);
  plan.j = VectorXd::Zero(N - 2);
  plan.slack_lb = VectorXd::Zero(N + 1);
  plan.slack_ub = VectorXd::Zero(N + 1);
  return plan;
}

// Certain-infeasibility prechecks: pinned initial rows, then interval
// reachability of the corridor (a relaxation, so emptiness is a proof).
bool provably_infeasible(const QpProblem& prob) {
  const int N = prob.n_steps;
  const double tol = 1e-9;
  const double relax_lb0 = prob.soft ? prob.s_cap_lb(0) : 0.0;
  const double relax_ub0 = prob.soft ? prob.s_cap_ub(0) : 0.0;
  if (prob.p0 < prob.p_lb(0) - relax_lb0 - tol || prob.p0 > prob.p_ub(0) + relax_ub0 + tol) {
    return true;
  }
  if (prob.v0 < prob.v_lb(0) - tol || prob.v0 > prob.v_ub(0) + tol) return true;

  double s_lo = prob.p0, s_hi = prob.p0;
  double v_lo = prob.v0, v_hi = prob.v0;
  double a_lo = prob.a_lb.minCoeff(), a_hi = prob.a_ub.maxCoeff();
  for (int t = 0; t <= N; ++t) {
    const double rl = prob.soft ? prob.s_cap_lb(t) : 0.0;
    const double ru = prob.soft ? prob.s_cap_ub(t) : 0.0;
    s_lo = std::max(s_lo, prob.p_lb(t) - rl);
    s_hi = std::min(s_hi, prob.p_ub(t) + ru);
    if (s_lo > s_hi + tol) return true;
    if (t < N) {
      v_lo = std::max(v_lo, prob.v_lb(t));
      v_hi = std::min(v_hi, prob.v_ub(t));
      if (v_lo > v_hi + tol) return true;
    }
    if (t < N - 1) {
      a_lo = std::max(a_lo, prob.a_lb(t));
      a_hi = std::min(a_hi, prob.a_ub(t));
      if (a_lo > a_hi + tol) return true;
    }
    if (t == N) break;
    const double j_lo = t <= N - 3 ? prob.j_lb(t) : 0.0;
    const double j_hi = t <= N - 3 ? prob.j_ub(t) : 0.0;
    const double ns_lo = s_lo + v_lo * prob.dt;
    const double ns_hi = s_hi + v_hi * prob.dt;
    const double nv_lo = v_lo + a_lo * prob.dt;
    const double nv_hi = v_hi + a_hi * prob.dt;
    const double na_lo = a_lo + j_lo * prob.dt;
    const double na_hi = a_hi + j_hi * prob.dt;
    s_lo = ns_lo;
    s_hi = ns_hi;
    v_lo = nv_lo;
    v_hi = nv_hi;
    a_lo = na_lo;
    a_hi = na_hi;
  }
  return false;
}

struct PolishResult {
  bool ok = false;
  VectorXd x;
  VectorXd y;  // unscaled row multipliers
};

// Equality-constrained re-solve on the active set guessed from the row
// multipliers and, optionally, from row values sitting on their bounds
// (degenerate active rows carry zero multipliers). Single-variable rows
// (jerk and slack boxes) fix their variable outright; the rest become
// equalities in a regularized KKT system with iterative refinement.
PolishResult polish(const Structure& st, const QpProblem& prob, const VectorXd& y_unscaled,
                    double y_threshold, const VectorXd* row_values, double act_tol) {
  PolishResult res;
  const int nx = st.nx;

  // Active-set guess: multiplier sign first, then rows sitting on a bound
  // (degenerate active rows carry zero multipliers).
  struct Active {
    int row;
    int side;  // -1 lower, +1 upper
  };
  std::vector<Active> active;
  for (int i = 0; i < st.m; ++i) {
    const double y = y_unscaled(i);
    int side = 0;
    if (y < -y_threshold && std::isfinite(st.lo_raw(i))) side = -1;
    if (y > y_threshold && std::isfinite(st.up_raw(i))) side = 1;
    if (side == 0 && row_values) {
      const double val = (*row_values)(i);
      const bool lo_near = std::isfinite(st.lo_raw(i)) && val - st.lo_raw(i) <= act_tol;
      const bool up_near = std::isfinite(st.up_raw(i)) && st.up_raw(i) - val <= act_tol;
      if (lo_near && up_near) {
        side = (val - st.lo_raw(i) <= st.up_raw(i) - val) ? -1 : 1;
      } else if (lo_near) {
        side = -1;
      } else if (up_near) {
        side = 1;
      }
    }
    if (side != 0) active.push_back({i, side});
  }

  auto row_coeff = [&](int row, int var) -> double {
    const double e = st.row_scale(row);
    if (var < st.nz) return st.Az(row, var) / e;
    const int s = var - st.nz;
    return st.s_index[row] == s ? st.s_coeff(row) / e : 0.0;
  };

  VectorXd q_full = VectorXd::Zero(nx);
  q_full.head(st.nz) = st.qz;
  if (st.soft) {
    for (int t = 0; t <= st.N; ++t) {
      q_full(st.nz + t) = prob.w_b(t);
      q_full(st.nz + (st.N + 1) + t) = prob.w_b(t);
    }
  }
  auto P_entry = [&](int a, int b) -> double {
    if (a < st.nz && b < st.nz) return st.Pzz(a, b);
    return 0.0;
  };

  const double delta = 1e-9;

  // Wrong-signed multipliers mean a row was misclassified (ties between
  // touching rows make the guess ambiguous): drop those rows and
  // re-solve, a few rounds at most.
  for (int round = 0; round < 6; ++round) {
    std::vector<double> fixed_value(nx, 0.0);
    std::vector<char> fixed(nx, 0);
    std::vector<int> fixed_active;  // indices into `active`
    std::vector<int> eq_active;

    bool conflict = false;
    for (std::size_t ai = 0; ai < active.size() && !conflict; ++ai) {
      const auto [i, side] = active[ai];
      const double bound = side < 0 ? st.lo_raw(i) : st.up_raw(i);
      const bool z_part = st.Az.row(i).cwiseAbs().maxCoeff() > 0.0;
      const int s = st.s_index[i];
      if (!z_part && s >= 0) {
        const int var = st.nz + s;
        const double val = bound / (st.s_coeff(i) / st.row_scale(i));
        if (fixed[var] && std::abs(fixed_value[var] - val) > 1e-9) {
          conflict = true;
          break;
        }
        if (!fixed[var]) {
          fixed[var] = 1;
          fixed_value[var] = val;
          fixed_active.push_back(static_cast<int>(ai));
        }
      } else if (z_part && s < 0 && st.off_j <= i && i < st.off_j + (st.N - 2)) {
        const int var = 1 + (i - st.off_j);
        if (fixed[var] && std::abs(fixed_value[var] - bound) > 1e-9) {
          conflict = true;
          break;
        }
        if (!fixed[var]) {
          fixed[var] = 1;
          fixed_value[var] = bound;
          fixed_active.push_back(static_cast<int>(ai));
        }
      } else {
        eq_active.push_back(static_cast<int>(ai));
      }
    }
    if (conflict) return res;

    std::vector<int> free_idx;
    for (int v = 0; v < nx; ++v) {
      if (!fixed[v]) free_idx.push_back(v);
    }
    const int nf = static_cast<int>(free_idx.size());
    if (nf == 0 && !eq_active.empty()) return res;

    // Keep an independent subset of the general equality rows; touching
    // position rows imply the speed rows between them and would make the
    // system singular.
    if (eq_active.size() > 1 && nf > 0) {
      const int k_all = static_cast<int>(eq_active.size());
      MatrixXd At(nf, k_all);
      for (int c = 0; c < k_all; ++c) {
        const int row = active[eq_active[c]].row;
        for (int a = 0; a < nf; ++a) At(a, c) = row_coeff(row, free_idx[a]);
      }
      Eigen::ColPivHouseholderQR<MatrixXd> qr(At);
      qr.setThreshold(1e-9);
      const int rank = qr.rank();
      if (rank < k_all) {
        std::vector<char> keep(k_all, 0);
        const auto& perm = qr.colsPermutation().indices();
        for (int c = 0; c < rank; ++c) keep[perm(c)] = 1;
        std::vector<int> kept;
        for (int c = 0; c < k_all; ++c) {
          if (keep[c]) kept.push_back(eq_active[c]);
        }
        eq_active = std::move(kept);
      }
    }
    const int k = static_cast<int>(eq_active.size());

    const int dim = nf + k;
    MatrixXd K = MatrixXd::Zero(dim, dim);
    VectorXd rhs = VectorXd::Zero(dim);
    for (int a = 0; a < nf; ++a) {
      for (int b = 0; b < nf; ++b) K(a, b) = P_entry(free_idx[a], free_idx[b]);
      K(a, a) += delta;
      double r = -q_full(free_idx[a]);
      for (int v = 0; v < nx; ++v) {
        if (fixed[v]) r -= P_entry(free_idx[a], v) * fixed_value[v];
      }
      rhs(a) = r;
    }
    for (int c = 0; c < k; ++c) {
      const auto [row, side] = active[eq_active[c]];
      double b = side < 0 ? st.lo_raw(row) : st.up_raw(row);
      for (int v = 0; v < nx; ++v) {
        if (fixed[v]) b -= row_coeff(row, v) * fixed_value[v];
      }
      for (int a = 0; a < nf; ++a) {
        const double coef = row_coeff(row, free_idx[a]);
        K(nf + c, a) = coef;
        K(a, nf + c) = coef;
      }
      K(nf + c, nf + c) = -delta;
      rhs(nf + c) = b;
    }

    Eigen::LDLT<MatrixXd> ldlt(K);
    if (ldlt.info() != Eigen::Success) return res;
    VectorXd sol = ldlt.solve(rhs);
    MatrixXd K0 = K;
    for (int a = 0; a < nf; ++a) K0(a, a) -= delta;
    for (int c = 0; c < k; ++c) K0(nf + c, nf + c) += delta;
    for (int it = 0; it < 3; ++it) {
      VectorXd resid = rhs - K0 * sol;
      sol += ldlt.solve(resid);
    }

    res.x = VectorXd::Zero(nx);
    for (int v = 0; v < nx; ++v) {
      if (fixed[v]) res.x(v) = fixed_value[v];
    }
    for (int a = 0; a < nf; ++a) res.x(free_idx[a]) = sol(a);

    res.y = VectorXd::Zero(st.m);
    for (int c = 0; c < k; ++c) res.y(active[eq_active[c]].row) = sol(nf + c);

    // Multipliers for fixed single-variable rows from stationarity.
    VectorXd grad = st.Pzz * res.x.head(st.nz) + st.qz;
    for (int ai : fixed_active) {
      const int i = active[ai].row;
      const bool z_part = st.Az.row(i).cwiseAbs().maxCoeff() > 0.0;
      const int s = st.s_index[i];
      if (!z_part && s >= 0) {
        double acc = q_full(st.nz + s);
        for (int r2 = 0; r2 < st.m; ++r2) {
          if (r2 == i || st.s_index[r2] != s) continue;
          acc += (st.s_coeff(r2) / st.row_scale(r2)) * res.y(r2);
        }
        res.y(i) = -acc / (st.s_coeff(i) / st.row_scale(i));
      } else {
        const int var = 1 + (i - st.off_j);
        double acc = grad(var);
        for (int c = 0; c < k; ++c) {
          acc += row_coeff(active[eq_active[c]].row, var) * res.y(active[eq_active[c]].row);
        }
        res.y(i) = -acc;
      }
    }

    // Sign check: upper-active rows need y >= 0, lower-active y <= 0.
    const double sign_tol = 1e-8 * std::max(1.0, res.y.cwiseAbs().maxCoeff());
    std::vector<char> drop(active.size(), 0);
    bool any_wrong = false;
    auto flag = [&](int ai) {
      const auto [row, side] = active[ai];
      const double yv = res.y(row);
      if ((side > 0 && yv < -sign_tol) || (side < 0 && yv > sign_tol)) {
        drop[ai] = 1;
        any_wrong = true;
      }
    };
    for (int c = 0; c < k; ++c) flag(eq_active[c]);
    for (int ai : fixed_active) flag(ai);
    if (!any_wrong) {
      res.ok = true;
      return res;
    }
    std::vector<Active> next;
    for (std::size_t ai = 0; ai < active.size(); ++ai) {
      if (!drop[ai]) next.push_back(active[ai]);
    }
    active = std::move(next);
  }
  return res;
}
}

struct MuView {
  VectorXd mu_p, mu_v, mu_a, mu_j;       // net multipliers per state index
  VectorXd y_plo, y_pup, y_slb, y_sub;   // raw row multipliers
};

MuView split_duals(const RowLayout& lay, const VectorXd& y) {
  const int N = lay.N;
  MuView mv;
  mv.mu_p = VectorXd::Zero(N + 1);
  mv.y_plo = VectorXd::Zero(N + 1);
  mv.y_pup = VectorXd::Zero(N + 1);
  for (int t = lay.p_start; t <= N; ++t) {
    mv.y_plo(t) = y(lay.off_plo + (t - lay.p_start));
    mv.y_pup(t) = y(lay.off_pup + (t - lay.p_start));
    mv.mu_p(t) = mv.y_plo(t) + mv.y_pup(t);
  }
  mv.mu_v = VectorXd::Zero(N);
  for (int t = 1; t <= N - 1; ++t) mv.mu_v(t) = y(lay.off_v + (t - 1));
  mv.mu_a = VectorXd::Zero(N - 1);
  for (int t = 0; t <= N - 2; ++t) mv.mu_a(t) = y(lay.off_a + t);
  mv.mu_j = VectorXd::Zero(std::max(N - 2, 0));
  for (int t = 0; t <= N - 3; ++t) mv.mu_j(t) = y(lay.off_j + t);
  if (lay.soft) {
    mv.y_slb = VectorXd::Zero(N + 1);
    mv.y_sub = VectorXd::Zero(N + 1);
    for (int t = 0; t <= N; ++t) {
      mv.y_slb(t) = y(lay.off_slb + t);
      mv.y_sub(t) = y(lay.off_sub + t);
    }
  }
  return mv;
}

}  // namespace

double QpProblem::objective_value(const Eigen::VectorXd& p, const Eigen::VectorXd& a,
                                  const Eigen::VectorXd& j, const Eigen::VectorXd& s_lb,
                                  const Eigen::VectorXd& s_ub) const {
  double cost = 0.5 * (w_a * a.squaredNorm() + w_j * j.squaredNorm()) - w_f * p(p.size() - 1);
  if (soft && s_lb.size() == w_b.size()) cost += w_b.dot(s_lb) + w_b.dot(s_ub);
  return cost;
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kSolved:
      return "solved";
    case SolveStatus::kInfeasible:
      return "infeasible";
    case SolveStatus::kMaxIter:
      return "max_iter";
  }
  return "unknown";
}

QpProblem build_problem(const Profile& profile, const SpeedBound& speed_bound,
                        const KinematicLimits& limits, double dt, double p0, double v0, double a0,
                        const QpWeights& weights, bool soft, double slack_cap_lb,
                        double slack_cap_ub) {
  const int n = static_cast<int>(profile.lb.size());
  if (n < 4) throw DimensionMismatch("build_problem: need at least 4 corridor samples");
  if (dt <= 0.0) throw DimensionMismatch("build_problem: dt must be positive");
  const int N = n - 1;
  if (static_cast<int>(speed_bound.ub_v.size()) < N) {
    throw DimensionMismatch("build_problem: speed bound shorter than the horizon");
  }
  if (weights.w_b < 10.0 * std::max(weights.w_a, weights.w_j) || weights.w_b <= 0.0) {
    throw DimensionMismatch("build_problem: slack weight must dominate comfort weights");
  }
  if (weights.w_f <= 0.0) {
    throw DimensionMismatch("build_problem: terminal-displacement weight must be positive");
  }

  QpProblem prob;
  prob.n_steps = N;
  prob.dt = dt;
  prob.p0 = p0;
  prob.v0 = v0;
  prob.a0_hint = a0;
  prob.p_lb = Eigen::Map<const VectorXd>(profile.lb.data(), n);
  prob.p_ub = Eigen::Map<const VectorXd>(profile.ub.data(), n);
  prob.v_lb = VectorXd::Constant(N, limits.v_min);
  prob.v_ub.resize(N);
  for (int t = 0; t < N; ++t) prob.v_ub(t) = std::min(limits.v_max, speed_bound.ub_v[t]);
  prob.a_lb = VectorXd::Constant(N - 1, limits.a_min);
  prob.a_ub = VectorXd::Constant(N - 1, limits.a_max);
  prob.j_lb = VectorXd::Constant(N - 2, limits.j_min);
  prob.j_ub = VectorXd::Constant(N - 2, limits.j_max);
  prob.w_a = weights.w_a;
  prob.w_j = weights.w_j;
  prob.w_f = weights.w_f;
  prob.w_b = VectorXd::Constant(N + 1, weights.w_b);
  prob.soft = soft;
  prob.s_cap_lb = VectorXd::Constant(N + 1, soft ? slack_cap_lb : 0.0);
  prob.s_cap_ub = VectorXd::Constant(N + 1, soft ? slack_cap_ub : 0.0);
  prob.profile_id = profile.id;
  return prob;
}

SpeedPlan AdmmSpeedQp::solve(const QpProblem& prob, const WarmStart* warm) const {
  if (prob.n_steps < 3) throw DimensionMismatch("solve: n_steps must be at least 3");
  if (prob.dt <= 0.0) throw DimensionMismatch("solve: dt must be positive");

  if (provably_infeasible(prob)) return infeasible_plan(prob);

  const Structure st = build_structure(prob);
  const VectorXd q = scaled_gradient(st, prob);

  VectorXd x = VectorXd::Zero(st.nx);
  if (warm && warm->z.size() == st.nz) x.head(st.nz) = warm->z;

  VectorXd w(st.m), y = VectorXd::Zero(st.m);
  apply_A(st, x, w);
  w = w.cwiseMax(st.lo).cwiseMin(st.up);

  double rho = settings_.rho0;
  double sigma = settings_.sigma;
  KktFactor factor = factorize(st, rho, sigma);
  if (!factor.ok) {
    sigma = 1e-4;
    factor = factorize(st, rho, sigma);
  }

  VectorXd ax(st.m), aty(st.nx), px(st.nx), rhs(st.nx), xt(st.nx), wt(st.m), yprev = y;
  double eps_tier = std::max(settings_.eps_abs, 1e-12);
  SpeedPlan best_plan;
  bool have_candidate = false;

  auto unscale_duals = [&](const VectorXd& yscaled) {
    VectorXd out(st.m);
    for (int i = 0; i < st.m; ++i) out(i) = yscaled(i) * st.row_scale(i) / st.cost_scale;
    return out;
  };

  auto try_finish = [&](int iter) -> bool {
    const VectorXd y_raw = unscale_duals(y);
    SpeedPlan cand = make_plan(prob, x, SolveStatus::kSolved, iter, st, y_raw, false);

    VectorXd row_vals(st.m);
    apply_A(st, x, row_vals);
    row_vals = row_vals.cwiseQuotient(st.row_scale);
    double rp_raw = 0.0;
    for (int i = 0; i < st.m; ++i) {
      if (std::isfinite(st.lo_raw(i))) rp_raw = std::max(rp_raw, st.lo_raw(i) - row_vals(i));
      if (std::isfinite(st.up_raw(i))) rp_raw = std::max(rp_raw, row_vals(i) - st.up_raw(i));
    }
    const double ymax = std::max(1.0, y_raw.cwiseAbs().maxCoeff());
    struct Attempt {
      double thr;
      bool use_values;
      double act_tol;
    };
    const Attempt attempts[] = {
        {1e-7 * ymax, true, std::max(1e-7, 5.0 * rp_raw)},
        {1e-7 * ymax, false, 0.0},
        {1e-4 * ymax, true, std::max(1e-5, 20.0 * rp_raw)},
    };
    for (const Attempt& at : attempts) {
      PolishResult pol =
          polish(st, prob, y_raw, at.thr, at.use_values ? &row_vals : nullptr, at.act_tol);
      if (!pol.ok) continue;
      SpeedPlan polished = make_plan(prob, pol.x, SolveStatus::kSolved, iter, st, pol.y, true);
      const double cand_worst =
          std::max({cand.kkt.stationarity, cand.kkt.primal, cand.kkt.complementarity});
      const double pol_worst = std::max(
          {polished.kkt.stationarity, polished.kkt.primal, polished.kkt.complementarity});
      if (pol_worst < cand_worst) {
        cand = std::move(polished);
        if (cand.kkt.certified(5e-6)) break;
      }
    }
    if (!have_candidate ||
        std::max({cand.kkt.stationarity, cand.kkt.primal, cand.kkt.complementarity}) <
            std::max({best_plan.kkt.stationarity, best_plan.kkt.primal,
                      best_plan.kkt.complementarity})) {
      best_plan = cand;
      have_candidate = true;
    }
    return best_plan.kkt.certified(5e-6);
  };

  int iter = 0;
  for (iter = 1; iter <= settings_.max_iter; ++iter) {
    apply_At(st, rho * w - y, rhs);
    rhs.noalias() += sigma * x - q;
    kkt_solve(st, factor, rhs, xt);
    apply_A(st, xt, wt);

    x = settings_.alpha * xt + (1.0 - settings_.alpha) * x;
    VectorXd w_hat = settings_.alpha * wt + (1.0 - settings_.alpha) * w;
    VectorXd w_new = (w_hat + y / rho).cwiseMax(st.lo).cwiseMin(st.up);
    y += rho * (w_hat - w_new);
    w = w_new;

    if (iter % settings_.check_interval != 0 && iter != settings_.max_iter) continue;

    apply_A(st, x, ax);
    apply_At(st, y, aty);
    apply_P(st, x, px);
    const double rp = (ax - w).cwiseAbs().maxCoeff();
    const double rd = (px + q + aty).cwiseAbs().maxCoeff();
    const double eps_p = eps_tier + settings_.eps_rel * std::max(ax.cwiseAbs().maxCoeff(),
                                                                 w.cwiseAbs().maxCoeff());
    const double eps_d =
        eps_tier + settings_.eps_rel * std::max({px.cwiseAbs().maxCoeff(),
                                                 aty.cwiseAbs().maxCoeff(),
                                                 q.cwiseAbs().maxCoeff()});

    const bool converged = rp <= eps_p && rd <= eps_d;
    if (converged || iter % 500 == 0) {
      if (try_finish(iter)) return best_plan;
      if (converged) {
        if (eps_tier <= 1e-11) break;
        eps_tier *= 1e-2;  // tighten and keep iterating
      }
    }

    if (!prob.soft && iter % 25 == 0) {
      const VectorXd dy = y - yprev;
      const double dy_norm = dy.cwiseAbs().maxCoeff();
      if (dy_norm > 1e-10) {
        VectorXd atdy(st.nx);
        apply_At(st, dy, atdy);
        if (atdy.cwiseAbs().maxCoeff() <= 1e-6 * dy_norm) {
          double support = 0.0;
          bool bounded = true;
          for (int i = 0; i < st.m && bounded; ++i) {
            if (dy(i) > 1e-10 * dy_norm) {
              if (!std::isfinite(st.up(i))) bounded = false;
              else support += st.up(i) * dy(i);
            } else if (dy(i) < -1e-10 * dy_norm) {
              if (!std::isfinite(st.lo(i))) bounded = false;
              else support += st.lo(i) * dy(i);
            }
          }
          if (bounded && support <= -1e-6 * dy_norm) {
            return infeasible_plan(prob);
          }
        }
      }
      yprev = y;
    }

    if (iter % settings_.rho_interval == 0) {
      const double num = rp / std::max({ax.cwiseAbs().maxCoeff(), w.cwiseAbs().maxCoeff(), 1e-12});
      const double den = rd / std::max({px.cwiseAbs().maxCoeff(), aty.cwiseAbs().maxCoeff(),
                                        q.cwiseAbs().maxCoeff(), 1e-12});
      const double ratio = std::sqrt(num / std::max(den, 1e-16));
      if (ratio > 5.0 || ratio < 0.2) {
        rho = std::clamp(rho * ratio, 1e-6, 1e6);
        factor = factorize(st, rho, sigma);
        if (!factor.ok) {
          sigma *= 100.0;
          factor = factorize(st, rho, sigma);
        }
      }
    }
  }

  try_finish(std::min(iter, settings_.max_iter));
  if (have_candidate) {
    if (!best_plan.kkt.certified(1e-4)) best_plan.status = SolveStatus::kMaxIter;
    return best_plan;
  }
  const VectorXd y_raw = unscale_duals(y);
  return make_plan(prob, x, SolveStatus::kMaxIter, std::min(iter, settings_.max_iter), st, y_raw,
                   false);
}

SpeedPlan solve(const QpProblem& problem, const WarmStart* warm, const AdmmSettings& settings) {
  return AdmmSpeedQp(settings).solve(problem, warm);
}

KktReport verify_kkt(const QpProblem& prob, const SpeedPlan& plan) {
  KktReport report;
  if (plan.status != SolveStatus::kSolved && plan.status != SolveStatus::kMaxIter) {
    report.applicable = false;
    return report;
  }
  report.applicable = plan.status == SolveStatus::kSolved;

  const int N = prob.n_steps;
  const double dt = prob.dt;
  const RowLayout lay = make_layout(N, prob.soft);
  const VectorXd y = plan.dual.size() == lay.m ? plan.dual : VectorXd::Zero(lay.m);
  const MuView mv = split_duals(lay, y);

  // dynamics and pinned initial state
  double dyn = std::max(std::abs(plan.p(0) - prob.p0), std::abs(plan.v(0) - prob.v0));
  for (int t = 0; t < N; ++t) dyn = std::max(dyn, std::abs(plan.p(t + 1) - plan.p(t) - plan.v(t) * dt));
  for (int t = 0; t + 1 < N; ++t) dyn = std::max(dyn, std::abs(plan.v(t + 1) - plan.v(t) - plan.a(t) * dt));
  for (int t = 0; t + 2 < N; ++t) dyn = std::max(dyn, std::abs(plan.a(t + 1) - plan.a(t) - plan.j(t) * dt));
  report.dynamics = dyn;

  // primal feasibility
  double primal = 0.0;
  for (int t = 0; t <= N; ++t) {
    const double slb = prob.soft ? plan.slack_lb(t) : 0.0;
    const double sub = prob.soft ? plan.slack_ub(t) : 0.0;
    primal = std::max(primal, prob.p_lb(t) - slb - plan.p(t));
    primal = std::max(primal, plan.p(t) - prob.p_ub(t) - sub);
    if (prob.soft) {
      primal = std::max(primal, -plan.slack_lb(t));
      primal = std::max(primal, plan.slack_lb(t) - prob.s_cap_lb(t));
      primal = std::max(primal, -plan.slack_ub(t));
      primal = std::max(primal, plan.slack_ub(t) - prob.s_cap_ub(t));
    }
  }
  for (int t = 0; t < N; ++t) {
    primal = std::max(primal, prob.v_lb(t) - plan.v(t));
    primal = std::max(primal, plan.v(t) - prob.v_ub(t));
  }
  for (int t = 0; t + 1 < N; ++t) {
    primal = std::max(primal, prob.a_lb(t) - plan.a(t));
    primal = std::max(primal, plan.a(t) - prob.a_ub(t));
  }
  for (int t = 0; t + 2 < N; ++t) {
    primal = std::max(primal, prob.j_lb(t) - plan.j(t));
    primal = std::max(primal, plan.j(t) - prob.j_ub(t));
  }
  report.primal = std::max(primal, 0.0);

  // stationarity: reconstruct the dynamics multipliers exactly, leaving
  // the genuine residual on the free entries a(0), j(t) and the slacks.
  VectorXd lp(N + 1), lv(N), la(std::max(N - 1, 0));
  lp(N) = prob.w_f - mv.mu_p(N);
  for (int t = N - 1; t >= 1; --t) lp(t) = lp(t + 1) - mv.mu_p(t);
  lv(N - 1) = dt * lp(N) - mv.mu_v(N - 1);
  for (int t = N - 2; t >= 1; --t) lv(t) = lv(t + 1) + dt * lp(t + 1) - mv.mu_v(t);
  double stat = 0.0;
  if (N >= 3) {
    la(N - 2) = dt * lv(N - 1) - prob.w_a * plan.a(N - 2) - mv.mu_a(N - 2);
    for (int t = N - 3; t >= 1; --t) {
      la(t) = la(t + 1) + dt * lv(t + 1) - prob.w_a * plan.a(t) - mv.mu_a(t);
    }
    stat = std::max(stat, std::abs(prob.w_a * plan.a(0) + mv.mu_a(0) - dt * lv(1) - la(1)));
    for (int t = 0; t <= N - 3; ++t) {
      stat = std::max(stat, std::abs(prob.w_j * plan.j(t) + mv.mu_j(t) - dt * la(t + 1)));
    }
  }
  if (prob.soft) {
    for (int t = 0; t <= N; ++t) {
      stat = std::max(stat, std::abs(prob.w_b(t) + mv.y_plo(t) + mv.y_slb(t)));
      stat = std::max(stat, std::abs(prob.w_b(t) - mv.y_pup(t) + mv.y_sub(t)));
    }
  }
  report.stationarity = stat;

  // complementarity over every inequality row (wrong-sign multipliers on
  // one-sided rows count as their own magnitude)
  double comp = 0.0;
  auto comp_row = [&](double yv, double val, double lo, double up) {
    if (yv > 0.0) {
      comp = std::max(comp, std::isfinite(up) ? yv * std::abs(up - val) : yv);
    } else if (yv < 0.0) {
      comp = std::max(comp, std::isfinite(lo) ? -yv * std::abs(val - lo) : -yv);
    }
  };
  for (int t = lay.p_start; t <= N; ++t) {
    const double slb = prob.soft ? plan.slack_lb(t) : 0.0;
    const double sub = prob.soft ? plan.slack_ub(t) : 0.0;
    comp_row(mv.y_plo(t), plan.p(t) + slb, prob.p_lb(t), kInf);
    comp_row(mv.y_pup(t), plan.p(t) - sub, -kInf, prob.p_ub(t));
  }
  for (int t = 1; t <= N - 1; ++t) comp_row(mv.mu_v(t), plan.v(t), prob.v_lb(t), prob.v_ub(t));
  for (int t = 0; t <= N - 2; ++t) comp_row(mv.mu_a(t), plan.a(t), prob.a_lb(t), prob.a_ub(t));
  for (int t = 0; t <= N - 3; ++t) comp_row(mv.mu_j(t), plan.j(t), prob.j_lb(t), prob.j_ub(t));
  if (prob.soft) {
    for (int t = 0; t <= N; ++t) {
      comp_row(mv.y_slb(t), plan.slack_lb(t), 0.0, prob.s_cap_lb(t));
      comp_row(mv.y_sub(t), plan.slack_ub(t), 0.0, prob.s_cap_ub(t));
    }
  }
  report.complementarity = comp;
  return report;
}

}  // namespace mpqp
