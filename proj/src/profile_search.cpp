#include "mpqp/profile_search.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>

#include "mpqp/errors.hpp"
#include "mpqp/parallel.hpp"

namespace mpqp {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

std::uint64_t fnv_mix(std::uint64_t h, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  for (int i = 0; i < 8; ++i) {
    h ^= (bits >> (8 * i)) & 0xffull;
    h *= kFnvPrime;
  }
  return h;
}

std::uint64_t hash_cell(std::uint64_t h, const Cell& c) {
  return fnv_mix(fnv_mix(h, c.s_min), c.s_max);
}

bool cells_overlap(const Cell& a, const Cell& b) {
  return std::max(a.s_min, b.s_min) < std::min(a.s_max, b.s_max);
}

struct Partial {
  std::vector<int> cell_idx;
  std::uint64_t id;
};

}  // namespace

std::vector<Profile> enumerate_profiles(const std::vector<CellLayer>& layers, double start_s,
                                        int max_profiles, double root_tolerance) {
  if (layers.empty() || max_profiles < 1) {
    throw DimensionMismatch("enumerate_profiles: layers nonempty and max_profiles >= 1 required");
  }

  std::vector<Partial> frontier;
  const auto& roots = layers.front().viable;
  for (int i = 0; i < static_cast<int>(roots.size()); ++i) {
    if (start_s >= roots[i].s_min - root_tolerance && start_s <= roots[i].s_max + root_tolerance) {
      frontier.push_back({{i}, hash_cell(kFnvOffset, roots[i])});
    }
  }
  if (frontier.empty()) {
    throw NoTraversablePath("enumerate_profiles: no viable cell at the origin");
  }

  auto truncate = [&](std::vector<Partial>& f) {
    if (static_cast<int>(f.size()) <= max_profiles) return;
    std::sort(f.begin(), f.end(), [](const Partial& a, const Partial& b) { return a.id < b.id; });
    f.resize(max_profiles);
  };
  truncate(frontier);

  for (std::size_t t = 1; t < layers.size(); ++t) {
    const auto& cells = layers[t].viable;
    std::vector<Partial> next;
    next.reserve(frontier.size());
    for (const Partial& p : frontier) {
      const Cell& cur = layers[t - 1].viable[p.cell_idx.back()];
      for (int i = 0; i < static_cast<int>(cells.size()); ++i) {
        if (!cells_overlap(cur, cells[i])) continue;
        Partial q;
        q.cell_idx = p.cell_idx;
        q.cell_idx.push_back(i);
        q.id = hash_cell(p.id, cells[i]);
        next.push_back(std::move(q));
      }
    }
    truncate(next);
    frontier = std::move(next);
    if (frontier.empty()) return {};
  }

  std::vector<Profile> out;
  out.reserve(frontier.size());
  for (const Partial& p : frontier) {
    Profile prof;
    prof.id = p.id;
    prof.cells.reserve(layers.size());
    prof.lb.reserve(layers.size());
    prof.ub.reserve(layers.size());
    for (std::size_t t = 0; t < layers.size(); ++t) {
      const Cell& c = layers[t].viable[p.cell_idx[t]];
      prof.cells.push_back(c);
      prof.lb.push_back(c.s_min);
      prof.ub.push_back(c.s_max);
    }
    out.push_back(std::move(prof));
  }
  std::sort(out.begin(), out.end(), [](const Profile& a, const Profile& b) { return a.id < b.id; });
  out.erase(std::unique(out.begin(), out.end(),
                        [](const Profile& a, const Profile& b) { return a.id == b.id; }),
            out.end());
  return out;
}

std::vector<Profile> kinematic_post_filter(const std::vector<Profile>& profiles, double s0,
                                           double v0, double a0, const KinematicLimits& limits,
                                           double dt, double lb_relax, double ub_relax, int jobs) {
  std::vector<char> keep(profiles.size(), 0);
  parallel_for(
      profiles.size(),
      [&](std::size_t i) {
        const Profile& prof = profiles[i];
        double s_lo = s0, s_hi = s0;
        double v_lo = v0, v_hi = v0;
        double a_lo = a0, a_hi = a0;
        bool feasible = true;
        for (std::size_t t = 0; t < prof.lb.size(); ++t) {
          s_lo = std::max(s_lo, prof.lb[t] - lb_relax);
          s_hi = std::min(s_hi, prof.ub[t] + ub_relax);
          v_lo = std::max(v_lo, limits.v_min);
          v_hi = std::min(v_hi, limits.v_max);
          a_lo = std::max(a_lo, limits.a_min);
          a_hi = std::min(a_hi, limits.a_max);
          if (s_lo > s_hi || v_lo > v_hi || a_lo > a_hi) {
            feasible = false;
            break;
          }
          const double ns_lo = s_lo + v_lo * dt;
          const double ns_hi = s_hi + v_hi * dt;
          const double nv_lo = v_lo + a_lo * dt;
          const double nv_hi = v_hi + a_hi * dt;
          const double na_lo = a_lo + limits.j_min * dt;
          const double na_hi = a_hi + limits.j_max * dt;
          s_lo = ns_lo;
          s_hi = ns_hi;
          v_lo = nv_lo;
          v_hi = nv_hi;
          a_lo = na_lo;
          a_hi = na_hi;
        }
        keep[i] = feasible ? 1 : 0;
      },
      jobs);

  std::vector<Profile> out;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    if (keep[i]) out.push_back(profiles[i]);
  }
  return out;
}

std::string dump_profiles(const std::vector<Profile>& profiles) {
  std::string out = "# profile_id t_index lb ub\n";
  char buf[160];
  for (const Profile& p : profiles) {
    for (std::size_t t = 0; t < p.lb.size(); ++t) {
      std::snprintf(buf, sizeof(buf), "%016llx %zu %.9g %.9g\n",
                    static_cast<unsigned long long>(p.id), t, p.lb[t], p.ub[t]);
      out += buf;
    }
  }
  return out;
}

}  // namespace mpqp
