#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace ir {

struct Point2 {
  double x = 0;
  double y = 0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

/// Twice the signed area of triangle (o, a, b); positive when o->a->b turns left.
constexpr double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

/// Convex hull by Andrew's monotone chain.
///
/// Vertices come out counterclockwise starting at the lowest point (leftmost
/// among ties). Collinear and duplicate points are dropped, so one distinct
/// point gives a single vertex and an all-collinear input gives its two
/// endpoints.
inline std::vector<Point2> convex_hull(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() <= 2) {
    if (pts.size() == 2 && (pts[1].y < pts[0].y)) std::swap(pts[0], pts[1]);
    return pts;
  }

  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {  // lower
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {  // upper
    const auto& p = pts[i];
    while (k >= lower && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);  // last point repeats the first

  auto start = std::min_element(hull.begin(), hull.end(), [](const Point2& a, const Point2& b) {
    return a.y < b.y || (a.y == b.y && a.x < b.x);
  });
  std::rotate(hull.begin(), start, hull.end());
  return hull;
}

/// True when p lies inside or on the boundary of the convex polygon `hull`
/// (counterclockwise, as returned by convex_hull), within `tol` of an edge.
inline bool hull_contains(const std::vector<Point2>& hull, const Point2& p, double tol = 1e-9) {
  if (hull.empty()) return false;
  if (hull.size() == 1)
    return std::abs(hull[0].x - p.x) <= tol && std::abs(hull[0].y - p.y) <= tol;
  if (hull.size() == 2) {
    const auto& a = hull[0];
    const auto& b = hull[1];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    if (std::abs(cross(a, b, p)) > tol * std::max(1.0, len)) return false;
    const double t = (p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y);
    return t >= -tol * len && t <= len * len + tol * len;
  }
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const auto& a = hull[i];
    const auto& b = hull[(i + 1) % hull.size()];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    if (cross(a, b, p) < -tol * std::max(1.0, len)) return false;
  }
  return true;
}

}  // namespace ir
