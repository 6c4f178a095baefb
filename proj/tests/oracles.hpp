#pragma once

// Reference implementations used only by tests. They are deliberately
// different algorithms from the library code they check.

#include <array>
#include <cmath>

#include "negoplan/geometry.hpp"

namespace oracle {

using negoplan::OrientedBox;
using negoplan::Vec2;

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

inline bool segments_touch(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  const double d1 = cross(q2 - q1, p1 - q1);
  const double d2 = cross(q2 - q1, p2 - q1);
  const double d3 = cross(p2 - p1, q1 - p1);
  const double d4 = cross(p2 - p1, q2 - p1);
  return ((d1 > 0) != (d2 > 0) || d1 == 0 || d2 == 0) && ((d3 > 0) != (d4 > 0) || d3 == 0 || d4 == 0);
}

/// Closed convex polygon overlap by corner containment and edge crossings.
inline bool boxes_overlap(const OrientedBox& a, const OrientedBox& b) {
  const auto ca = a.corners();
  const auto cb = b.corners();
  for (const Vec2& p : ca)
    if (b.contains(p, 1e-12)) return true;
  for (const Vec2& p : cb)
    if (a.contains(p, 1e-12)) return true;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (segments_touch(ca[i], ca[(i + 1) % 4], cb[j], cb[(j + 1) % 4])) return true;
  return false;
}

/// Dense sampling of a's boundary and interior against b.
inline bool sampled_overlap(const OrientedBox& a, const OrientedBox& b, int n = 60) {
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) {
      const double u = -0.5 + static_cast<double>(i) / n;
      const double v = -0.5 + static_cast<double>(j) / n;
      const Vec2 p = a.center + u * a.length * a.axis_long() + v * a.width * a.axis_lat();
      if (b.contains(p, 1e-9)) return true;
    }
  return false;
}

/// Simpson's rule.
template <typename F>
double integrate(F&& f, double a, double b, int n = 2000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

}  // namespace oracle
