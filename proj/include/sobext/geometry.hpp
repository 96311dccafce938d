#pragma once

#include <algorithm>
#include <array>
#include <cmath>

namespace sobext {

struct Point {
  double x1 = 0.0;
  double x2 = 0.0;
};

inline double distance(Point a, Point b) { return std::hypot(a.x1 - b.x1, a.x2 - b.x2); }

/// Closed axis-parallel rectangle [lo1, hi1] x [lo2, hi2].
struct Rect {
  double lo1 = 0.0, hi1 = 0.0, lo2 = 0.0, hi2 = 0.0;

  Rect expanded(double margin) const {
    return {lo1 - margin, hi1 + margin, lo2 - margin, hi2 + margin};
  }
  bool contains(Point p) const {
    return p.x1 >= lo1 && p.x1 <= hi1 && p.x2 >= lo2 && p.x2 <= hi2;
  }
  bool intersects(const Rect& o) const {
    return lo1 <= o.hi1 && o.lo1 <= hi1 && lo2 <= o.hi2 && o.lo2 <= hi2;
  }
  double width() const { return hi1 - lo1; }
  double height() const { return hi2 - lo2; }
  Point center() const { return {0.5 * (lo1 + hi1), 0.5 * (lo2 + hi2)}; }
};

/// Euclidean distance between two closed rectangles (0 if they meet).
inline double distance(const Rect& a, const Rect& b) {
  const double d1 = std::max({0.0, a.lo1 - b.hi1, b.lo1 - a.hi1});
  const double d2 = std::max({0.0, a.lo2 - b.hi2, b.lo2 - a.hi2});
  return std::hypot(d1, d2);
}

inline double distance(const Rect& r, Point p) {
  const double d1 = std::max({0.0, r.lo1 - p.x1, p.x1 - r.hi1});
  const double d2 = std::max({0.0, r.lo2 - p.x2, p.x2 - r.hi2});
  return std::hypot(d1, d2);
}

/// Value, gradient and Hessian of a scalar field at one point.
/// The Hessian is stored as (h11, h12, h22).
struct Jet2 {
  double value = 0.0;
  std::array<double, 2> grad{};
  std::array<double, 3> hess{};
};

/// Frobenius norm of the Hessian part of a jet.
inline double hessian_norm(const Jet2& j) {
  return std::sqrt(j.hess[0] * j.hess[0] + 2.0 * j.hess[1] * j.hess[1] + j.hess[2] * j.hess[2]);
}

}  // namespace sobext
