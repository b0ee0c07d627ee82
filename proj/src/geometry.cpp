#include "causalaf/geometry.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

namespace causalaf {

std::array<Vec2, 4> Box::corners() const {
  const Vec2 u = unit(heading);
  const Vec2 v{-u.y, u.x};
  const Vec2 hl = u * (0.5 * length), hw = v * (0.5 * width);
  return {center + hl + hw, center - hl + hw, center - hl - hw, center + hl - hw};
}

Vec2 Box::to_local(Vec2 p) const {
  const Vec2 d = p - center;
  const Vec2 u = unit(heading);
  return {d.dot(u), d.cross(u) * -1.0};
}

bool Box::contains(Vec2 p) const {
  const Vec2 l = to_local(p);
  return std::abs(l.x) <= 0.5 * length && std::abs(l.y) <= 0.5 * width;
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = ab.dot(ab);
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + ab * t)).norm();
}

namespace {

bool separated_on_axis(const std::array<Vec2, 4>& a, const std::array<Vec2, 4>& b, Vec2 axis) {
  double amin = std::numeric_limits<double>::infinity(), amax = -amin;
  double bmin = amin, bmax = -amin;
  for (const auto& p : a) {
    const double s = p.dot(axis);
    amin = std::min(amin, s);
    amax = std::max(amax, s);
  }
  for (const auto& p : b) {
    const double s = p.dot(axis);
    bmin = std::min(bmin, s);
    bmax = std::max(bmax, s);
  }
  return amax < bmin || bmax < amin;
}

}  // namespace

double box_distance(const Box& a, const Box& b) {
  const auto ca = a.corners();
  const auto cb = b.corners();
  const std::array<Vec2, 4> axes{unit(a.heading), unit(a.heading + std::numbers::pi / 2), unit(b.heading),
                                 unit(b.heading + std::numbers::pi / 2)};
  bool separated = false;
  for (const auto& axis : axes) {
    if (separated_on_axis(ca, cb, axis)) {
      separated = true;
      break;
    }
  }
  if (!separated) return 0.0;

  // Disjoint convex polygons: the closest pair involves a vertex of one and an
  // edge of the other.
  double d = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 4; ++k) {
    const Vec2 a0 = ca[k], a1 = ca[(k + 1) % 4];
    const Vec2 b0 = cb[k], b1 = cb[(k + 1) % 4];
    for (const auto& p : cb) d = std::min(d, point_segment_distance(p, a0, a1));
    for (const auto& p : ca) d = std::min(d, point_segment_distance(p, b0, b1));
  }
  return d;
}

std::optional<double> ray_box_hit(Vec2 origin, Vec2 direction, const Box& box) {
  // Slab test in the box frame.
  const Vec2 o = box.to_local(origin);
  const Vec2 u = unit(box.heading);
  const Vec2 d{direction.dot(u), -direction.cross(u)};
  const double half[2] = {0.5 * box.length, 0.5 * box.width};
  const double os[2] = {o.x, o.y};
  const double ds[2] = {d.x, d.y};
  double tmin = 0.0, tmax = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 2; ++k) {
    if (std::abs(ds[k]) < 1e-15) {
      if (os[k] < -half[k] || os[k] > half[k]) return std::nullopt;
      continue;
    }
    double t1 = (-half[k] - os[k]) / ds[k];
    double t2 = (half[k] - os[k]) / ds[k];
    if (t1 > t2) std::swap(t1, t2);
    tmin = std::max(tmin, t1);
    tmax = std::min(tmax, t2);
    if (tmin > tmax) return std::nullopt;
  }
  return tmin;
}

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a + std::numbers::pi, two_pi);
  if (a <= 0.0) a += two_pi;
  return a - std::numbers::pi;
}

}  // namespace causalaf
