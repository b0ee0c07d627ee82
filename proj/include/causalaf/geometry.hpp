#pragma once

#include <array>
#include <cmath>
#include <optional>

namespace causalaf {

struct Vec2 {
  double x = 0.0, y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double cross(Vec2 o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline Vec2 unit(double heading) { return {std::cos(heading), std::sin(heading)}; }

/// Oriented rectangle footprint; `heading` is the direction of the length axis.
struct Box {
  Vec2 center;
  double heading = 0.0;
  double length = 0.0;
  double width = 0.0;

  std::array<Vec2, 4> corners() const;
  /// Point expressed in the box frame (x along the length axis).
  Vec2 to_local(Vec2 p) const;
  bool contains(Vec2 p) const;
};

/// Minimum Euclidean distance between two footprints; 0 when they overlap.
double box_distance(const Box& a, const Box& b);

/// Distance along a unit-direction ray to the first point of the box, or
/// nullopt if the ray misses. A ray starting inside the box hits at 0.
std::optional<double> ray_box_hit(Vec2 origin, Vec2 direction, const Box& box);

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b);

/// Normalizes an angle to (-pi, pi].
double wrap_angle(double a);

}  // namespace causalaf
