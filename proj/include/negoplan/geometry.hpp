#pragma once

#include <array>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace negoplan {

using Vec2 = Eigen::Vector2d;

/// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

struct Aabb {
  Vec2 min;
  Vec2 max;

  bool overlaps(const Aabb& other) const {
    return (min.array() <= other.max.array()).all() && (other.min.array() <= max.array()).all();
  }
};

/// Rectangle with its long side along `heading`.
struct OrientedBox {
  Vec2 center = Vec2::Zero();
  double heading = 0.0;
  double length = 0.0;
  double width = 0.0;

  Vec2 axis_long() const;
  Vec2 axis_lat() const;
  std::array<Vec2, 4> corners() const;
  Aabb bounds() const;
  /// Closed point-in-rectangle test.
  bool contains(const Vec2& p, double tol = 0.0) const;
  OrientedBox inflated(double margin) const;
};

/// Separating-axis test on closed rectangles: touching boxes intersect.
bool boxes_intersect(const OrientedBox& a, const OrientedBox& b);

/// Arc-length parameterized polyline. Queries beyond either end extrapolate
/// along the end segment's direction.
class ReferencePath {
 public:
  ReferencePath() = default;
  explicit ReferencePath(std::vector<Vec2> points);

  double length() const { return s_.empty() ? 0.0 : s_.back(); }
  const std::vector<Vec2>& points() const { return points_; }

  Vec2 position(double s) const;
  double heading(double s) const;
  double curvature(double s) const;
  Vec2 normal(double s) const;

  /// Point at arc length s and signed lateral offset d (positive to the left).
  Vec2 to_world(double s, double d) const;
  /// Closest-point projection. Returns (s, d).
  std::pair<double, double> project(const Vec2& p) const;

 private:
  std::size_t segment_index(double s) const;

  std::vector<Vec2> points_;
  std::vector<double> s_;
  std::vector<double> heading_;    // per segment
  std::vector<double> curvature_;  // per vertex
};

}  // namespace negoplan
