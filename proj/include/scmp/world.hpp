#pragma once

// Workspace, static obstacles and closed (touching counts) collision tests.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <variant>
#include <vector>

#include "scmp/model.hpp"

namespace scmp {

struct Circle {
  Vec2 center;
  double radius = 0.0;

  friend bool operator==(const Circle&, const Circle&) = default;
};

struct Polygon4 {
  std::array<Vec2, 4> corners;  // convex, counterclockwise

  friend bool operator==(const Polygon4&, const Polygon4&) = default;
};

struct Obstacle {
  std::variant<Circle, Polygon4> shape;

  static Obstacle circle(Vec2 c, double r) { return {Circle{c, r}}; }
  static Obstacle rectangle(const std::array<Vec2, 4>& corners) { return {Polygon4{corners}}; }

  bool is_circle() const { return std::holds_alternative<Circle>(shape); }
  friend bool operator==(const Obstacle&, const Obstacle&) = default;
};

inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

inline bool is_convex_ccw(const std::array<Vec2, 4>& c) {
  for (std::size_t i = 0; i < 4; ++i) {
    const Vec2 e0 = c[(i + 1) % 4] - c[i];
    const Vec2 e1 = c[(i + 2) % 4] - c[(i + 1) % 4];
    if (!(cross(e0, e1) > 0.0)) return false;
  }
  return true;
}

/// Workspace: the core map is [0, width] x [0, height]; benchmark layouts add
/// obstacle-free bands of `band_expansion` metres below and above it.
struct World {
  double width = 0.0;
  double height = 0.0;
  double band_expansion = 0.0;
  std::vector<Obstacle> obstacles;

  double x_min() const { return 0.0; }
  double x_max() const { return width; }
  double y_min() const { return -band_expansion; }
  double y_max() const { return height + band_expansion; }

  void validate() const {
    if (!(width > 0.0) || !(height > 0.0)) throw std::invalid_argument("world: width and height must be > 0");
    if (!(band_expansion >= 0.0)) throw std::invalid_argument("world: band_expansion must be >= 0");
    for (std::size_t i = 0; i < obstacles.size(); ++i) {
      const auto& o = obstacles[i];
      const std::string tag = "world: obstacle " + std::to_string(i);
      if (const auto* c = std::get_if<Circle>(&o.shape)) {
        if (!(c->radius > 0.0)) throw std::invalid_argument(tag + " radius must be > 0");
        if (c->center.x - c->radius < 0.0 || c->center.x + c->radius > width ||
            c->center.y - c->radius < 0.0 || c->center.y + c->radius > height)
          throw std::invalid_argument(tag + " lies outside the map");
      } else {
        const auto& p = std::get<Polygon4>(o.shape);
        if (!is_convex_ccw(p.corners)) throw std::invalid_argument(tag + " is not a convex ccw quadrilateral");
        for (const Vec2& v : p.corners)
          if (v.x < 0.0 || v.x > width || v.y < 0.0 || v.y > height)
            throw std::invalid_argument(tag + " lies outside the map");
      }
    }
  }
};

namespace detail {

struct Interval {
  double lo, hi;
};

template <std::size_t N>
Interval project(const std::array<Vec2, N>& pts, Vec2 axis) {
  Interval r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const Vec2& p : pts) {
    const double d = dot(p, axis);
    r.lo = std::min(r.lo, d);
    r.hi = std::max(r.hi, d);
  }
  return r;
}

template <std::size_t N, std::size_t M>
bool convex_overlap(const std::array<Vec2, N>& a, const std::array<Vec2, M>& b) {
  auto separated_on_edges = [](const auto& poly, const auto& p, const auto& q) {
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 e = poly[(i + 1) % n] - poly[i];
      const Vec2 axis{-e.y, e.x};
      const Interval ip = project(p, axis);
      const Interval iq = project(q, axis);
      if (ip.hi < iq.lo || iq.hi < ip.lo) return true;
    }
    return false;
  };
  return !separated_on_edges(a, a, b) && !separated_on_edges(b, a, b);
}

}  // namespace detail

/// Separating-axis test over the four edge normals; touching counts as overlap.
inline bool rectangles_overlap(const OrientedRectangle& a, const OrientedRectangle& b) {
  const double reach = a.bounding_radius() + b.bounding_radius();
  const Vec2 d = a.center - b.center;
  if (dot(d, d) > reach * reach) return false;
  return detail::convex_overlap(a.corners, b.corners);
}

inline bool circle_overlaps_rectangle(const Circle& c, const OrientedRectangle& r) {
  const Vec2 d = c.center - r.center;
  const double ca = std::cos(r.yaw);
  const double sa = std::sin(r.yaw);
  const double lx = ca * d.x + sa * d.y;
  const double ly = -sa * d.x + ca * d.y;
  const double qx = std::clamp(lx, -r.half_length, r.half_length);
  const double qy = std::clamp(ly, -r.half_width, r.half_width);
  const double dx = lx - qx;
  const double dy = ly - qy;
  return dx * dx + dy * dy <= c.radius * c.radius;
}

inline bool obstacle_overlaps(const Obstacle& o, const OrientedRectangle& fp) {
  if (const auto* c = std::get_if<Circle>(&o.shape)) {
    const double reach = c->radius + fp.bounding_radius();
    const Vec2 d = c->center - fp.center;
    if (dot(d, d) > reach * reach) return false;
    return circle_overlaps_rectangle(*c, fp);
  }
  return detail::convex_overlap(std::get<Polygon4>(o.shape).corners, fp.corners);
}

inline bool inside_bounds(const OrientedRectangle& fp, const World& w) {
  for (const Vec2& v : fp.corners)
    if (v.x < w.x_min() || v.x > w.x_max() || v.y < w.y_min() || v.y > w.y_max()) return false;
  return true;
}

/// True iff the footprint touches an obstacle or leaves the workspace.
inline bool collides_static(const OrientedRectangle& fp, const World& world) {
  if (!inside_bounds(fp, world)) return true;
  for (const Obstacle& o : world.obstacles)
    if (obstacle_overlaps(o, fp)) return true;
  return false;
}

inline bool bodies_overlap(const Pose& s1, const AgentSpec& spec1, const Pose& s2, const AgentSpec& spec2) {
  return rectangles_overlap(footprint(s1, spec1), footprint(s2, spec2));
}

inline bool bodies_overlap(const AgentState& s1, const AgentSpec& spec1, const AgentState& s2,
                           const AgentSpec& spec2) {
  return bodies_overlap(s1.pose(), spec1, s2.pose(), spec2);
}

/// Interpolation fractions checked on one sample interval. Always a multiple
/// of five so that every T_s/5 instant is covered.
inline int sweep_divisions(const Pose& a, const Pose& b, const AgentSpec& spec) {
  const double resolution = std::min(0.5 * spec.width, spec.v_abs_max() * spec.sample_time / 5.0);
  const double travel = std::hypot(b.x - a.x, b.y - a.y) +
                        angle_distance(a.yaw, b.yaw) * std::hypot(std::max(spec.front, spec.rear), 0.5 * spec.width);
  const int blocks = std::max(1, static_cast<int>(std::ceil(travel / (5.0 * resolution) - 1e-9)));
  return 5 * blocks;
}

/// Static check of the motion between two successive samples, both ends included.
inline bool sweep_collides_static(const Pose& a, const Pose& b, const AgentSpec& spec, const World& world) {
  const int n = sweep_divisions(a, b, spec);
  for (int k = 0; k <= n; ++k)
    if (collides_static(footprint(interpolate(a, b, static_cast<double>(k) / n), spec), world)) return true;
  return false;
}

}  // namespace scmp
