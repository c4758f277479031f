#pragma once

#include <array>
#include <cmath>

namespace mpqp {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Vec2&) const = default;
  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double k) const { return {x * k, y * k}; }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  double squared_norm() const { return x * x + y * y; }
  Vec2 normalized() const {
    double n = norm();
    return n > 0.0 ? Vec2{x / n, y / n} : Vec2{1.0, 0.0};
  }
  // 90 degree counter-clockwise rotation.
  Vec2 left_normal() const { return {-y, x}; }
};

inline Vec2 unit_from_angle(double theta) { return {std::cos(theta), std::sin(theta)}; }

inline double wrap_angle(double a) {
  while (a > M_PI) a -= 2.0 * M_PI;
  while (a < -M_PI) a += 2.0 * M_PI;
  return a;
}

// Oriented rectangle (center, heading, half extents along body axes).
struct OrientedBox {
  Vec2 center;
  double heading = 0.0;
  double half_length = 0.0;
  double half_width = 0.0;

  Vec2 axis_long() const { return unit_from_angle(heading); }
  Vec2 axis_lat() const { return axis_long().left_normal(); }

  std::array<Vec2, 4> corners() const {
    const Vec2 u = axis_long() * half_length;
    const Vec2 v = axis_lat() * half_width;
    return {center + u + v, center - u + v, center - u - v, center + u - v};
  }

  // Euclidean distance from a point to the rectangle (0 inside).
  double distance_to(const Vec2& p) const {
    const Vec2 d = p - center;
    const double lx = std::abs(d.dot(axis_long()));
    const double ly = std::abs(d.dot(axis_lat()));
    const double qx = std::max(lx - half_length, 0.0);
    const double qy = std::max(ly - half_width, 0.0);
    return std::hypot(qx, qy);
  }

  bool contains(const Vec2& p) const {
    const Vec2 d = p - center;
    return std::abs(d.dot(axis_long())) <= half_length &&
           std::abs(d.dot(axis_lat())) <= half_width;
  }
};

// Separating-axis overlap test for two oriented rectangles.
bool obb_overlap(const OrientedBox& a, const OrientedBox& b);

}  // namespace mpqp
