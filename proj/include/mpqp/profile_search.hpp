#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mpqp/cell_planner.hpp"
#include "mpqp/kinematic_limits.hpp"

namespace mpqp {

// One passage-order hypothesis: a viable cell per time step, giving the
// per-step position corridor fed to the optimizer.
struct Profile {
  std::vector<Cell> cells;
  std::vector<double> lb;
  std::vector<double> ub;
  std::uint64_t id = 0;  // stable hash of the (lb, ub) sequence
};

// Breadth-first enumeration over layers. Roots are viable cells at t=0
// containing start_s (within root_tolerance); a partial profile extends to
// every viable cell of the next layer that strictly overlaps its current
// cell, and is dropped when none does. If the frontier exceeds
// max_profiles the lowest-id partials are kept. Results are deduplicated
// by id and sorted by id. Throws NoTraversablePath when no root exists.
std::vector<Profile> enumerate_profiles(const std::vector<CellLayer>& layers, double start_s,
                                        int max_profiles, double root_tolerance = 0.0);

// Necessary-condition reachability filter: propagates interval bounds of
// (s, v, a) through the triple integrator under the box limits, clamping
// the position interval to the profile corridor (optionally relaxed by
// lb_relax/ub_relax) at every step. Keeps a profile iff no interval goes
// empty. A relaxation: it never drops a profile that admits a feasible
// jerk sequence.
std::vector<Profile> kinematic_post_filter(const std::vector<Profile>& profiles, double s0,
                                           double v0, double a0, const KinematicLimits& limits,
                                           double dt, double lb_relax = 0.0, double ub_relax = 0.0,
                                           int jobs = 1);

std::string dump_profiles(const std::vector<Profile>& profiles);

}  // namespace mpqp
