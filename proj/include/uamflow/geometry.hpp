#pragma once

#include <algorithm>
#include <cmath>

namespace uamflow::geometry {

/// Planar point in scenario units (ft).
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

inline double cross(Point2 o, Point2 a, Point2 b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

/// True when segments pq and rs intersect at a point that is not a shared
/// endpoint. Collinear overlaps count as crossings.
inline bool segments_cross(Point2 p, Point2 q, Point2 r, Point2 s) {
  if (p == r || p == s || q == r || q == s) {
    // Shared endpoint: only an overlap along a common line is a crossing.
    const Point2 shared = (p == r || p == s) ? p : q;
    const Point2 a = (shared == p) ? q : p;
    const Point2 b = (shared == r) ? s : r;
    if (std::abs(cross(shared, a, b)) > 1e-9 * (distance(shared, a) * distance(shared, b)))
      return false;
    return (a.x - shared.x) * (b.x - shared.x) + (a.y - shared.y) * (b.y - shared.y) > 0.0;
  }
  const double d1 = cross(r, s, p), d2 = cross(r, s, q);
  const double d3 = cross(p, q, r), d4 = cross(p, q, s);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
    return true;
  auto on_segment = [](Point2 a, Point2 b, Point2 c) {
    return std::min(a.x, b.x) <= c.x && c.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= c.y &&
           c.y <= std::max(a.y, b.y);
  };
  if (d1 == 0 && on_segment(r, s, p)) return true;
  if (d2 == 0 && on_segment(r, s, q)) return true;
  if (d3 == 0 && on_segment(p, q, r)) return true;
  if (d4 == 0 && on_segment(p, q, s)) return true;
  return false;
}

}  // namespace uamflow::geometry
