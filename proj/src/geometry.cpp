#include "mpqp/geometry.hpp"

namespace mpqp {

namespace {

// Projects box extents onto a unit axis and checks the 1-D intervals.
bool separated_on_axis(const Vec2& axis, const OrientedBox& a, const OrientedBox& b) {
  const double ca = a.center.dot(axis);
  const double cb = b.center.dot(axis);
  const double ra = a.half_length * std::abs(a.axis_long().dot(axis)) +
                    a.half_width * std::abs(a.axis_lat().dot(axis));
  const double rb = b.half_length * std::abs(b.axis_long().dot(axis)) +
                    b.half_width * std::abs(b.axis_lat().dot(axis));
  return std::abs(ca - cb) > ra + rb;
}

}  // namespace

bool obb_overlap(const OrientedBox& a, const OrientedBox& b) {
  return !separated_on_axis(a.axis_long(), a, b) &&
         !separated_on_axis(a.axis_lat(), a, b) &&
         !separated_on_axis(b.axis_long(), a, b) &&
         !separated_on_axis(b.axis_lat(), a, b);
}

}  // namespace mpqp
