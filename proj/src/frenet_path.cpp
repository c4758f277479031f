#include "mpqp/frenet_path.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mpqp/errors.hpp"

namespace mpqp {

namespace {

constexpr double kDupEps = 1e-9;

double interp_angle(double a, double b, double t) {
  return a + wrap_angle(b - a) * t;
}

// Signed circumscribed-circle curvature of three points.
double three_point_curvature(const Vec2& a, const Vec2& b, const Vec2& c) {
  const Vec2 ab = b - a;
  const Vec2 bc = c - b;
  const Vec2 ac = c - a;
  const double denom = ab.norm() * bc.norm() * ac.norm();
  if (denom < 1e-12) return 0.0;
  return 2.0 * ab.cross(bc) / denom;
}

}  // namespace

FrenetPath build_path(const std::vector<Vec2>& waypoints, double ds) {
  if (ds <= 0.0) throw DegeneratePath("build_path: ds must be positive");

  std::vector<Vec2> pts;
  pts.reserve(waypoints.size());
  for (const Vec2& w : waypoints) {
    if (pts.empty() || (w - pts.back()).norm() > kDupEps) pts.push_back(w);
  }
  if (pts.size() < 2) throw DegeneratePath("build_path: fewer than 2 distinct waypoints");

  std::vector<double> cum(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    cum[i] = cum[i - 1] + (pts[i] - pts[i - 1]).norm();
  }
  const double total = cum.back();
  if (total < 2.0 * ds) throw DegeneratePath("build_path: total length below 2*ds");

  const std::size_t n = static_cast<std::size_t>(std::floor(total / ds + 1e-9)) + 1;

  FrenetPath path;
  path.ds = ds;
  path.stations.resize(n);
  path.points.resize(n);

  std::size_t seg = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = static_cast<double>(i) * ds;
    path.stations[i] = s;
    while (seg + 2 < pts.size() && cum[seg + 1] < s) ++seg;
    const double seg_len = cum[seg + 1] - cum[seg];
    const double t = seg_len > 0.0 ? std::clamp((s - cum[seg]) / seg_len, 0.0, 1.0) : 0.0;
    path.points[i] = pts[seg] + (pts[seg + 1] - pts[seg]) * t;
  }

  // Self-intersection guard: far-apart stations must not coincide in space.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 5; j < n; ++j) {
      if ((path.points[i] - path.points[j]).norm() < 0.5 * ds) {
        throw DegeneratePath("build_path: self-intersecting path");
      }
    }
  }

  path.headings.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 d = (i == 0)       ? path.points[1] - path.points[0]
                   : (i == n - 1) ? path.points[n - 1] - path.points[n - 2]
                                  : path.points[i + 1] - path.points[i - 1];
    path.headings[i] = std::atan2(d.y, d.x);
  }

  std::vector<double> raw(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    raw[i] = three_point_curvature(path.points[i - 1], path.points[i], path.points[i + 1]);
  }
  if (n >= 3) {
    raw[0] = raw[1];
    raw[n - 1] = raw[n - 2];
  }
  path.curvatures.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0 || i + 1 == n) {
      path.curvatures[i] = raw[i];
    } else {
      path.curvatures[i] = (raw[i - 1] + raw[i] + raw[i + 1]) / 3.0;
    }
  }
  return path;
}

Vec2 FrenetPath::position_at(double s) const {
  const double sc = std::clamp(s, 0.0, length());
  const std::size_t i = std::min(static_cast<std::size_t>(sc / ds), size() - 2);
  const double t = (sc - stations[i]) / ds;
  return points[i] + (points[i + 1] - points[i]) * t;
}

double FrenetPath::heading_at(double s) const {
  const double sc = std::clamp(s, 0.0, length());
  const std::size_t i = std::min(static_cast<std::size_t>(sc / ds), size() - 2);
  const double t = (sc - stations[i]) / ds;
  return interp_angle(headings[i], headings[i + 1], t);
}

double FrenetPath::curvature_at(double s) const {
  const double sc = std::clamp(s, 0.0, length());
  const std::size_t i = std::min(static_cast<std::size_t>(sc / ds), size() - 2);
  const double t = (sc - stations[i]) / ds;
  return curvatures[i] + (curvatures[i + 1] - curvatures[i]) * t;
}

Vec2 FrenetPath::point_from_frenet(double s, double d) const {
  return position_at(s) + normal_at(s) * d;
}

std::pair<std::size_t, double> FrenetPath::nearest_station(const Vec2& p) const {
  std::size_t best = 0;
  double best_sq = std::numeric_limits<double>::max();
  for (std::size_t i = 0; i < size(); ++i) {
    const double sq = (p - points[i]).squared_norm();
    if (sq < best_sq) {
      best_sq = sq;
      best = i;
    }
  }
  return {best, std::sqrt(best_sq)};
}

FrenetPath::Projection FrenetPath::project(const Vec2& p, double corridor) const {
  const auto [idx, dist] = nearest_station(p);
  if (dist > corridor + ds) {
    throw OutOfCorridor("project: point outside path corridor");
  }

  // Refine the tangency condition g(s) = (p - P(s)) . t(s) = 0 around the
  // nearest sample. g' ~ -(1 - K d) stays negative while |K d| < 1, so a
  // few safeguarded Newton steps converge.
  const double lo = std::max(0.0, stations[idx] - 1.5 * ds);
  const double hi = std::min(length(), stations[idx] + 1.5 * ds);
  double s = stations[idx];
  for (int it = 0; it < 30; ++it) {
    const Vec2 tangent = tangent_at(s);
    const Vec2 delta = p - position_at(s);
    const double g = delta.dot(tangent);
    const double dg = -1.0 + delta.dot(normal_at(s)) * curvature_at(s);
    if (std::abs(dg) < 1e-12) break;
    double step = -g / dg;
    step = std::clamp(step, -0.5 * ds, 0.5 * ds);
    const double next = std::clamp(s + step, lo, hi);
    if (std::abs(next - s) < 1e-12) {
      s = next;
      break;
    }
    s = next;
  }

  const Vec2 delta = p - position_at(s);
  Projection out;
  out.s = s;
  out.d = delta.dot(normal_at(s));
  if (std::abs(out.d) > corridor) {
    throw OutOfCorridor("project: lateral offset outside corridor");
  }
  return out;
}

}  // namespace mpqp
