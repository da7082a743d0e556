#pragma once

#include <cmath>
#include <numbers>

namespace mmv2x {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double k) const { return {x * k, y * k}; }
  constexpr Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr bool operator==(const Vec2&) const = default;

  double norm() const { return std::hypot(x, y); }
};

inline double distance(Vec2 a, Vec2 b) { return (b - a).norm(); }

// Bearings follow the compass convention: 0 points along +y, angles grow
// clockwise. heading_vector(h) is the unit vector of travel for bearing h.
inline Vec2 heading_vector(double bearing) {
  return {std::sin(bearing), std::cos(bearing)};
}

inline double bearing(Vec2 from, Vec2 to) {
  return std::atan2(to.x - from.x, to.y - from.y);
}

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  a = std::remainder(a, kTwoPi);
  if (a <= -kPi) a += kTwoPi;
  return a;
}

/// Maps a vector expressed in a body frame (+x right of travel, +y along
/// travel) into world coordinates for a body with the given bearing.
inline Vec2 body_to_world(Vec2 local, double bearing) {
  const double c = std::cos(bearing);
  const double s = std::sin(bearing);
  return {local.x * c + local.y * s, -local.x * s + local.y * c};
}

/// Axis-aligned rectangle, min corner (x0, y0) and max corner (x1, y1).
struct Rect {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  constexpr bool operator==(const Rect&) const = default;

  constexpr bool strictly_contains(Vec2 p) const {
    return p.x > x0 && p.x < x1 && p.y > y0 && p.y < y1;
  }
  constexpr bool overlaps_interior(const Rect& o) const {
    return x0 < o.x1 && o.x0 < x1 && y0 < o.y1 && o.y0 < y1;
  }
};

/// True when the open interior of `r` meets the closed segment a-b. Segments
/// that only touch the boundary (grazing an edge or a corner) do not count.
inline bool segment_crosses_interior(Vec2 a, Vec2 b, const Rect& r) {
  // Liang-Barsky clip against the closed rectangle.
  const Vec2 d = b - a;
  double t0 = 0.0;
  double t1 = 1.0;
  const double p[4] = {-d.x, d.x, -d.y, d.y};
  const double q[4] = {a.x - r.x0, r.x1 - a.x, a.y - r.y0, r.y1 - a.y};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return false;
      continue;
    }
    const double t = q[i] / p[i];
    if (p[i] < 0.0) {
      if (t > t1) return false;
      if (t > t0) t0 = t;
    } else {
      if (t < t0) return false;
      if (t < t1) t1 = t;
    }
  }
  if (t1 < t0) return false;
  // The clipped piece lies in a convex set, so its midpoint is interior iff
  // any part of it is.
  const Vec2 mid = a + d * (0.5 * (t0 + t1));
  return r.strictly_contains(mid);
}

}  // namespace mmv2x
