#pragma once

// Discrete-time Ackermann kinematics, motion primitives and body footprints.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace scmp {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Maps an angle into the half-open interval [-pi, pi).
inline double normalize_angle(double a) {
  if (a >= -kPi && a < kPi) return a;
  double r = std::fmod(a + kPi, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  r -= kPi;
  return r >= kPi ? r - kTwoPi : r;
}

/// Absolute angular difference on the circle, in [0, pi].
inline double angle_distance(double a, double b) {
  return std::abs(normalize_angle(a - b));
}

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;

  friend bool operator==(const Pose&, const Pose&) = default;
};

/// Rear-axle pose at a discrete time step.
struct AgentState {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
  int t = 0;

  Pose pose() const { return {x, y, yaw}; }
  Vec2 position() const { return {x, y}; }
  friend bool operator==(const AgentState&, const AgentState&) = default;
};

inline AgentState at_time(const Pose& p, int t) { return {p.x, p.y, p.yaw, t}; }

struct ControlInput {
  double v = 0.0;      // m/s, signed
  double omega = 0.0;  // rad/s, signed

  friend bool operator==(const ControlInput&, const ControlInput&) = default;
};

/// Body geometry and kinematic limits of one vehicle.
struct AgentSpec {
  double wheelbase = 2.0;                        // L
  double front = 2.0;                            // rear axle to front edge
  double rear = 1.0;                             // rear axle to rear edge
  double width = 2.0;
  double v_forward_max = 2.5;                    // m/s, > 0
  double v_backward_max = -2.5;                  // m/s, < 0
  double phi_max = std::atan(2.0 / 3.5);         // steering limit
  double sample_time = 0.25;                     // T_s
  double inflation = 0.0;                        // footprint safety margin

  double length() const { return front + rear; }
  double min_turning_radius() const { return wheelbase / std::tan(phi_max); }
  double v_abs_max() const { return std::max(v_forward_max, -v_backward_max); }

  void validate() const {
    if (!(wheelbase > 0.0)) throw std::invalid_argument("agent spec: wheelbase must be > 0");
    if (!(front + rear > 0.0)) throw std::invalid_argument("agent spec: body length must be > 0");
    if (!(width > 0.0)) throw std::invalid_argument("agent spec: width must be > 0");
    if (!(v_forward_max > 0.0) || !(v_backward_max < 0.0))
      throw std::invalid_argument("agent spec: speed bounds must satisfy v_backward_max < 0 < v_forward_max");
    if (!(phi_max > 0.0) || !(phi_max < kPi / 2.0))
      throw std::invalid_argument("agent spec: phi_max must lie in (0, pi/2)");
    if (!(sample_time > 0.0)) throw std::invalid_argument("agent spec: sample_time must be > 0");
    if (!(inflation >= 0.0)) throw std::invalid_argument("agent spec: inflation must be >= 0");
  }

  friend bool operator==(const AgentSpec&, const AgentSpec&) = default;
};

class LimitViolation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Yaw rate of an Ackermann vehicle: omega = v / L * tan(phi).
inline double yaw_rate(double v, double phi, double wheelbase) {
  if (!std::isfinite(v) || !std::isfinite(phi) || !std::isfinite(wheelbase))
    throw std::invalid_argument("yaw_rate: non-finite input");
  if (!(wheelbase > 0.0)) throw std::invalid_argument("yaw_rate: wheelbase must be > 0");
  if (!(std::abs(phi) < kPi / 2.0)) throw std::invalid_argument("yaw_rate: |phi| must be < pi/2");
  return v / wheelbase * std::tan(phi);
}

/// Largest |omega| admissible at speed v (relative slack 1e-9 for rounding).
inline double max_yaw_rate(double v, const AgentSpec& spec) {
  return std::abs(v) * std::tan(spec.phi_max) / spec.wheelbase * (1.0 + 1e-9) + 1e-12;
}

inline bool control_in_bounds(const ControlInput& u, const AgentSpec& spec) {
  constexpr double kEps = 1e-12;
  return std::isfinite(u.v) && std::isfinite(u.omega) && u.v <= spec.v_forward_max + kEps &&
         u.v >= spec.v_backward_max - kEps && std::abs(u.omega) <= max_yaw_rate(u.v, spec);
}

/// One sample of the discrete model: z_t = z_{t-1} + T_s [v cos(yaw), v sin(yaw), omega].
inline AgentState step(const AgentState& s, const ControlInput& u, const AgentSpec& spec) {
  if (!control_in_bounds(u, spec))
    throw LimitViolation("step: control (v=" + std::to_string(u.v) + ", omega=" +
                         std::to_string(u.omega) + ") outside agent limits");
  const double ts = spec.sample_time;
  return {s.x + ts * u.v * std::cos(s.yaw), s.y + ts * u.v * std::sin(s.yaw),
          normalize_angle(s.yaw + ts * u.omega), s.t + 1};
}

enum class Direction { forward, backward, wait };

struct MotionPrimitive {
  Direction direction = Direction::wait;
  double steering = 0.0;    // one of -phi_max, 0, +phi_max
  double arc_length = 0.0;  // path length covered by the primitive (0 for wait)

  friend bool operator==(const MotionPrimitive&, const MotionPrimitive&) = default;
};

/// Number of model samples spanned by one search primitive.
inline int primitive_substeps(double step_duration, const AgentSpec& spec) {
  if (!(step_duration > 0.0)) throw std::invalid_argument("step duration must be > 0");
  return std::max(1, static_cast<int>(std::ceil(step_duration / spec.sample_time - 1e-9)));
}

/// The seven primitives in canonical order: forward {left, straight, right},
/// backward {left, straight, right}, wait.
inline std::array<MotionPrimitive, 7> primitive_set(const AgentSpec& spec, double step_duration) {
  const double fwd = spec.v_forward_max * step_duration;
  const double bwd = -spec.v_backward_max * step_duration;
  const double p = spec.phi_max;
  return {{{Direction::forward, p, fwd},
           {Direction::forward, 0.0, fwd},
           {Direction::forward, -p, fwd},
           {Direction::backward, p, bwd},
           {Direction::backward, 0.0, bwd},
           {Direction::backward, -p, bwd},
           {Direction::wait, 0.0, 0.0}}};
}

/// Constant control that realises a primitive over `substeps` samples.
inline ControlInput primitive_control(const MotionPrimitive& prim, const AgentSpec& spec, int substeps) {
  if (prim.direction == Direction::wait) return {};
  const double speed = prim.arc_length / (substeps * spec.sample_time);
  const double v = prim.direction == Direction::forward ? speed : -speed;
  return {v, yaw_rate(v, prim.steering, spec.wheelbase)};
}

/// All intermediate samples of a primitive (excluding `from`, including the end state).
inline std::vector<AgentState> primitive_rollout(const AgentState& from, const MotionPrimitive& prim,
                                                 const AgentSpec& spec, int substeps) {
  std::vector<AgentState> out;
  out.reserve(static_cast<std::size_t>(substeps));
  const ControlInput u = primitive_control(prim, spec, substeps);
  AgentState s = from;
  for (int k = 0; k < substeps; ++k) {
    s = step(s, u, spec);
    out.push_back(s);
  }
  return out;
}

struct PrimitiveSuccessor {
  MotionPrimitive primitive;
  AgentState state;
};

/// Seven successors of a state; arcs integrate the discrete model sample by sample.
inline std::array<PrimitiveSuccessor, 7> expand_primitives(const AgentState& s, const AgentSpec& spec,
                                                           double step_duration) {
  const int k = primitive_substeps(step_duration, spec);
  const auto prims = primitive_set(spec, step_duration);
  std::array<PrimitiveSuccessor, 7> out;
  for (std::size_t i = 0; i < prims.size(); ++i)
    out[i] = {prims[i], primitive_rollout(s, prims[i], spec, k).back()};
  return out;
}

/// Linear blend between two samples (yaw along the shorter arc).
inline Pose interpolate(const Pose& a, const Pose& b, double f) {
  return {a.x + f * (b.x - a.x), a.y + f * (b.y - a.y),
          normalize_angle(a.yaw + f * normalize_angle(b.yaw - a.yaw))};
}

struct OrientedRectangle {
  std::array<Vec2, 4> corners;  // counterclockwise
  Vec2 center;
  double half_length = 0.0;
  double half_width = 0.0;
  double yaw = 0.0;

  double bounding_radius() const { return std::hypot(half_length, half_width); }
  double area() const { return 4.0 * half_length * half_width; }
};

inline OrientedRectangle make_rectangle(Vec2 center, double yaw, double half_length, double half_width) {
  const Vec2 ax{std::cos(yaw), std::sin(yaw)};
  const Vec2 ay{-ax.y, ax.x};
  OrientedRectangle r;
  r.center = center;
  r.half_length = half_length;
  r.half_width = half_width;
  r.yaw = yaw;
  r.corners = {center - half_length * ax - half_width * ay, center + half_length * ax - half_width * ay,
               center + half_length * ax + half_width * ay, center - half_length * ax + half_width * ay};
  return r;
}

/// Vehicle body with the rear axle at (x, y) and the long axis along yaw.
inline OrientedRectangle footprint(const Pose& p, const AgentSpec& spec) {
  const double c = std::cos(p.yaw);
  const double s = std::sin(p.yaw);
  const double front = spec.front + spec.inflation;
  const double rear = spec.rear + spec.inflation;
  const double hw = 0.5 * spec.width + spec.inflation;
  auto world = [&](double lx, double ly) -> Vec2 { return {p.x + c * lx - s * ly, p.y + s * lx + c * ly}; };
  OrientedRectangle r;
  r.corners = {world(-rear, -hw), world(front, -hw), world(front, hw), world(-rear, hw)};
  r.center = world(0.5 * (front - rear), 0.0);
  r.half_length = 0.5 * (front + rear);
  r.half_width = hw;
  r.yaw = p.yaw;
  return r;
}

inline OrientedRectangle footprint(const AgentState& s, const AgentSpec& spec) {
  return footprint(s.pose(), spec);
}

}  // namespace scmp
