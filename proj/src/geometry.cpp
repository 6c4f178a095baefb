#include "negoplan/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace negoplan {

double wrap_angle(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double a = std::fmod(angle, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

Vec2 OrientedBox::axis_long() const { return {std::cos(heading), std::sin(heading)}; }
Vec2 OrientedBox::axis_lat() const { return {-std::sin(heading), std::cos(heading)}; }

std::array<Vec2, 4> OrientedBox::corners() const {
  const Vec2 hl = 0.5 * length * axis_long();
  const Vec2 hw = 0.5 * width * axis_lat();
  return {center + hl + hw, center - hl + hw, center - hl - hw, center + hl - hw};
}

Aabb OrientedBox::bounds() const {
  const double c = std::abs(std::cos(heading));
  const double s = std::abs(std::sin(heading));
  const Vec2 half{0.5 * (length * c + width * s), 0.5 * (length * s + width * c)};
  return {center - half, center + half};
}

bool OrientedBox::contains(const Vec2& p, double tol) const {
  const Vec2 r = p - center;
  return std::abs(r.dot(axis_long())) <= 0.5 * length + tol &&
         std::abs(r.dot(axis_lat())) <= 0.5 * width + tol;
}

OrientedBox OrientedBox::inflated(double margin) const {
  OrientedBox out = *this;
  out.length += 2.0 * margin;
  out.width += 2.0 * margin;
  return out;
}

namespace {

// Projection interval of a box onto a unit axis.
std::pair<double, double> project_box(const OrientedBox& box, const Vec2& axis) {
  const double c = box.center.dot(axis);
  const double r = 0.5 * box.length * std::abs(box.axis_long().dot(axis)) +
                   0.5 * box.width * std::abs(box.axis_lat().dot(axis));
  return {c - r, c + r};
}

}  // namespace

bool boxes_intersect(const OrientedBox& a, const OrientedBox& b) {
  const std::array<Vec2, 4> axes{a.axis_long(), a.axis_lat(), b.axis_long(), b.axis_lat()};
  for (const Vec2& axis : axes) {
    const auto [amin, amax] = project_box(a, axis);
    const auto [bmin, bmax] = project_box(b, axis);
    if (amax < bmin || bmax < amin) return false;
  }
  return true;
}

ReferencePath::ReferencePath(std::vector<Vec2> points) : points_(std::move(points)) {
  if (points_.size() < 2) throw std::invalid_argument("reference path needs at least two points");
  const std::size_t n = points_.size();
  s_.assign(n, 0.0);
  heading_.resize(n - 1);
  for (std::size_t i = 1; i < n; ++i) {
    const Vec2 delta = points_[i] - points_[i - 1];
    const double len = delta.norm();
    if (len <= 0.0) throw std::invalid_argument("reference path has repeated points");
    s_[i] = s_[i - 1] + len;
    heading_[i - 1] = std::atan2(delta.y(), delta.x());
  }
  curvature_.assign(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double dtheta = wrap_angle(heading_[i] - heading_[i - 1]);
    curvature_[i] = dtheta / (0.5 * (s_[i + 1] - s_[i - 1]));
  }
}

std::size_t ReferencePath::segment_index(double s) const {
  if (s <= s_.front()) return 0;
  if (s >= s_.back()) return s_.size() - 2;
  const auto it = std::upper_bound(s_.begin(), s_.end(), s);
  return static_cast<std::size_t>(std::distance(s_.begin(), it)) - 1;
}

Vec2 ReferencePath::position(double s) const {
  const std::size_t i = segment_index(s);
  const double t = (s - s_[i]) / (s_[i + 1] - s_[i]);
  return points_[i] + t * (points_[i + 1] - points_[i]);
}

double ReferencePath::heading(double s) const {
  // Blend segment headings across vertices so heading is continuous in s.
  const std::size_t n = heading_.size();
  if (n == 1 || s <= 0.5 * (s_[0] + s_[1])) return heading_.front();
  if (s >= 0.5 * (s_[n - 1] + s_[n])) return heading_.back();
  std::size_t i = segment_index(s);
  double mid = 0.5 * (s_[i] + s_[i + 1]);
  if (s < mid) {
    --i;
    mid = 0.5 * (s_[i] + s_[i + 1]);
  }
  const double next_mid = 0.5 * (s_[i + 1] + s_[i + 2]);
  const double t = (s - mid) / (next_mid - mid);
  return wrap_angle(heading_[i] + t * wrap_angle(heading_[i + 1] - heading_[i]));
}

double ReferencePath::curvature(double s) const {
  if (s <= s_.front() || s >= s_.back()) return 0.0;
  const std::size_t i = segment_index(s);
  const double t = (s - s_[i]) / (s_[i + 1] - s_[i]);
  return (1.0 - t) * curvature_[i] + t * curvature_[i + 1];
}

Vec2 ReferencePath::normal(double s) const {
  const double h = heading(s);
  return {-std::sin(h), std::cos(h)};
}

Vec2 ReferencePath::to_world(double s, double d) const { return position(s) + d * normal(s); }

std::pair<double, double> ReferencePath::project(const Vec2& p) const {
  double best_dist = std::numeric_limits<double>::infinity();
  double best_s = 0.0;
  double best_d = 0.0;
  const std::size_t nseg = points_.size() - 1;
  for (std::size_t i = 0; i < nseg; ++i) {
    const Vec2 a = points_[i];
    const Vec2 ab = points_[i + 1] - a;
    const double len2 = ab.squaredNorm();
    double t = (p - a).dot(ab) / len2;
    // Open-ended clamping on the end segments lets projections extrapolate.
    const double lo = (i == 0) ? -std::numeric_limits<double>::infinity() : 0.0;
    const double hi = (i + 1 == nseg) ? std::numeric_limits<double>::infinity() : 1.0;
    t = std::clamp(t, lo, hi);
    const Vec2 q = a + t * ab;
    const double dist = (p - q).norm();
    if (dist < best_dist) {
      best_dist = dist;
      best_s = s_[i] + t * std::sqrt(len2);
      const Vec2 rel = p - q;
      best_d = (ab.x() * rel.y() - ab.y() * rel.x()) / std::sqrt(len2);
    }
  }
  return {best_s, best_d};
}

}  // namespace negoplan
