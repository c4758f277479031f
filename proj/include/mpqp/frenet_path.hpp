#pragma once

#include <cstddef>
#include <vector>

#include "mpqp/geometry.hpp"

namespace mpqp {

// Ego path resampled at uniform arc-length spacing, with per-station
// heading and signed curvature. Immutable after construction; all queries
// are const and safe to call concurrently.
struct FrenetPath {
  double ds = 0.0;
  std::vector<double> stations;    // 0, ds, 2*ds, ...
  std::vector<Vec2> points;
  std::vector<double> headings;    // rad
  std::vector<double> curvatures;  // 1/m, signed (left turn positive)

  std::size_t size() const { return stations.size(); }
  double length() const { return stations.empty() ? 0.0 : stations.back(); }

  // Clamped interpolation at arc length s.
  Vec2 position_at(double s) const;
  double heading_at(double s) const;
  double curvature_at(double s) const;
  Vec2 tangent_at(double s) const { return unit_from_angle(heading_at(s)); }
  Vec2 normal_at(double s) const { return tangent_at(s).left_normal(); }

  // Frenet -> Cartesian. d is the signed lateral offset, positive left.
  Vec2 point_from_frenet(double s, double d) const;

  struct Projection {
    double s = 0.0;
    double d = 0.0;
  };

  // Cartesian -> Frenet. Throws OutOfCorridor when the nearest path point
  // is farther than `corridor`.
  Projection project(const Vec2& p, double corridor = 30.0) const;

  // Nearest sample index and its Euclidean distance; never throws.
  std::pair<std::size_t, double> nearest_station(const Vec2& p) const;
};

// Resamples a waypoint polyline at uniform spacing ds and derives headings
// and three-point finite-difference curvatures (3-tap smoothed).
// Throws DegeneratePath on fewer than 2 distinct waypoints, total length
// < 2*ds, or a self-intersecting polyline.
FrenetPath build_path(const std::vector<Vec2>& waypoints, double ds = 0.5);

}  // namespace mpqp
