#include <complex>
#include <random>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace scmp;
using scmp::testing::drive;

TEST(YawRate, QuarterPiSteeringAtUnitRatio) { EXPECT_NEAR(yaw_rate(2.0, kPi / 4.0, 2.0), 1.0, 1e-9); }

TEST(YawRate, ZeroSpeedGivesZero) { EXPECT_DOUBLE_EQ(yaw_rate(0.0, 0.3, 2.0), 0.0); }

TEST(YawRate, FullLockMatchesMinimumRadius) {
  // Steering chosen so that the radius v / omega is 3.5 m for L = 3.
  const double phi = std::atan(3.0 / 3.5);
  EXPECT_NEAR(2.5 / yaw_rate(2.5, phi, 3.0), 3.5, 1e-9);
  // The default vehicle: L = 2 with its stock steering limit.
  const AgentSpec spec;
  EXPECT_NEAR(2.5 / yaw_rate(2.5, spec.phi_max, spec.wheelbase), 3.5, 1e-9);
  EXPECT_NEAR(2.5 / yaw_rate(2.5, 0.5199, 2.0), 3.5, 1e-2);
}

TEST(YawRate, SignFollowsSpeedAndSteering) {
  EXPECT_LT(yaw_rate(-1.0, 0.2, 2.0), 0.0);
  EXPECT_LT(yaw_rate(1.0, -0.2, 2.0), 0.0);
  EXPECT_GT(yaw_rate(-1.0, -0.2, 2.0), 0.0);
}

TEST(YawRate, RejectsBadInput) {
  EXPECT_THROW(yaw_rate(1.0, kPi / 2.0, 2.0), std::invalid_argument);
  EXPECT_THROW(yaw_rate(1.0, 0.1, 0.0), std::invalid_argument);
  EXPECT_THROW(yaw_rate(std::nan(""), 0.1, 2.0), std::invalid_argument);
  EXPECT_THROW(yaw_rate(1.0, std::numeric_limits<double>::infinity(), 2.0), std::invalid_argument);
}

TEST(Step, ZeroControlKeepsPoseAndAdvancesTime) {
  const AgentSpec spec;
  const AgentState s = step({1.0, 2.0, 0.3, 5}, {0.0, 0.0}, spec);
  EXPECT_EQ(s.x, 1.0);
  EXPECT_EQ(s.y, 2.0);
  EXPECT_EQ(s.yaw, 0.3);
  EXPECT_EQ(s.t, 6);
}

TEST(Step, StraightAlongX) {
  AgentSpec spec;
  spec.sample_time = 0.5;
  const AgentState s = step({0.0, 0.0, 0.0, 0}, {2.0, 0.0}, spec);
  EXPECT_NEAR(s.x, 1.0, 1e-12);
  EXPECT_NEAR(s.y, 0.0, 1e-12);
  EXPECT_NEAR(s.yaw, 0.0, 1e-12);
  EXPECT_EQ(s.t, 1);
}

TEST(Step, HeadingNorthWithTurn) {
  AgentSpec spec;
  spec.sample_time = 0.1;
  const AgentState s = step({0.0, 0.0, kPi / 2.0, 3}, {2.0, 0.5}, spec);
  EXPECT_NEAR(s.x, 0.0, 1e-9);
  EXPECT_NEAR(s.y, 0.2, 1e-9);
  EXPECT_NEAR(s.yaw, kPi / 2.0 + 0.05, 1e-9);
  EXPECT_EQ(s.t, 4);
}

TEST(Step, RejectsControlsOutsideLimits) {
  const AgentSpec spec;
  EXPECT_THROW(step({}, {3.0, 0.0}, spec), LimitViolation);
  EXPECT_THROW(step({}, {-3.0, 0.0}, spec), LimitViolation);
  EXPECT_THROW(step({}, {2.5, 0.8}, spec), LimitViolation);  // radius 3.125 < 3.5
  EXPECT_THROW(step({}, {0.0, 0.1}, spec), LimitViolation);  // turning on the spot
  EXPECT_NO_THROW(step({}, {2.5, 2.5 / 3.5}, spec));
}

TEST(Step, IsBitwiseRepeatable) {
  const AgentSpec spec;
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> pos(-50, 50), yaw(-kPi, kPi), v(-2.5, 2.5), f(-1, 1);
  for (int i = 0; i < 1000; ++i) {
    const AgentState s{pos(rng), pos(rng), yaw(rng), i};
    const double vv = v(rng);
    const ControlInput u{vv, f(rng) * std::abs(vv) / spec.min_turning_radius()};
    const AgentState a = step(s, u, spec);
    const AgentState b = step(s, u, spec);
    EXPECT_EQ(a, b);
  }
}

TEST(NormalizeAngle, HalfOpenRange) {
  EXPECT_DOUBLE_EQ(normalize_angle(kPi), -kPi);
  EXPECT_DOUBLE_EQ(normalize_angle(-kPi), -kPi);
  EXPECT_NEAR(normalize_angle(3 * kPi + 0.1), -kPi + 0.1, 1e-12);
  EXPECT_NEAR(angle_distance(kPi - 0.1, -kPi + 0.1), 0.2, 1e-12);
}

TEST(Primitives, SevenWithExactlyOneWait) {
  const AgentSpec spec;
  const auto succ = expand_primitives({10.0, 10.0, 0.3, 0}, spec, 1.0);
  ASSERT_EQ(succ.size(), 7u);
  int waits = 0;
  for (const auto& s : succ) waits += s.primitive.direction == Direction::wait;
  EXPECT_EQ(waits, 1);
}

TEST(Primitives, StraightForwardOneMetre) {
  AgentSpec spec;
  spec.v_forward_max = 1.0;
  spec.v_backward_max = -1.0;
  for (const auto& s : expand_primitives({0.0, 0.0, 0.0, 0}, spec, 1.0)) {
    if (s.primitive.direction != Direction::forward || s.primitive.steering != 0.0) continue;
    EXPECT_NEAR(s.state.x, 1.0, 1e-12);
    EXPECT_NEAR(s.state.y, 0.0, 1e-12);
    EXPECT_NEAR(s.state.yaw, 0.0, 1e-12);
  }
}

TEST(Primitives, WaitKeepsPoseAndSpansOneSearchStep) {
  const AgentSpec spec;
  const AgentState start{4.0, 5.0, 1.0, 8};
  const auto succ = expand_primitives(start, spec, 1.0);
  const auto& w = succ.back();
  ASSERT_EQ(w.primitive.direction, Direction::wait);
  EXPECT_EQ(w.state.pose(), start.pose());
  EXPECT_EQ(w.state.t, start.t + primitive_substeps(1.0, spec));
}

// Closed form of K Euler samples at constant (v, omega): a geometric sum.
static Vec2 euler_chain(Pose p, double v, double w, double ts, int k) {
  using C = std::complex<double>;
  const C z = std::polar(1.0, p.yaw);
  const C q = std::polar(1.0, w * ts);
  const C sum = std::abs(w) < 1e-15 ? C(k) : (C(1.0) - std::pow(q, k)) / (C(1.0) - q);
  const C d = ts * v * z * sum;
  return {p.x + d.real(), p.y + d.imag()};
}

TEST(Primitives, ArcsMatchClosedForm) {
  const AgentSpec spec;
  const double ts = spec.sample_time;
  const int k = primitive_substeps(1.0, spec);
  const Pose start{3.0, -2.0, 0.7};
  for (const auto& s : expand_primitives(at_time(start, 0), spec, 1.0)) {
    if (s.primitive.direction == Direction::wait) continue;
    const ControlInput u = primitive_control(s.primitive, spec, k);
    const Vec2 oracle = euler_chain(start, u.v, u.omega, ts, k);
    EXPECT_NEAR(s.state.x, oracle.x, 1e-9);
    EXPECT_NEAR(s.state.y, oracle.y, 1e-9);
    const double sgn = s.primitive.direction == Direction::forward ? 1.0 : -1.0;
    const double turn = s.primitive.steering == 0.0 ? 0.0 : sgn * s.primitive.arc_length / spec.min_turning_radius();
    EXPECT_NEAR(angle_distance(s.state.yaw, start.yaw + (s.primitive.steering < 0 ? -turn : turn)), 0.0, 1e-9);
  }
}

TEST(Primitives, FullLockArcCloseToCircle) {
  // Euler samples at full lock sit on a circle whose radius tends to r_min as T_s shrinks.
  AgentSpec spec;
  spec.sample_time = 0.001;
  const double r = spec.min_turning_radius();
  const ControlInput u{2.5, 2.5 / r};
  const Trajectory tr = drive({0.0, 0.0, 0.0, 0}, u, 1000, spec);
  const double ang = 2.5 / r;
  // Exact circle: centre (0, r).
  EXPECT_NEAR(tr.states.back().x, r * std::sin(ang), 1e-2);
  EXPECT_NEAR(tr.states.back().y, r - r * std::cos(ang), 1e-2);
  EXPECT_NEAR(tr.states.back().yaw, ang, 1e-9);
}

TEST(Primitives, AllRespectTurningRadius) {
  const AgentSpec spec;
  const int k = primitive_substeps(1.0, spec);
  for (const MotionPrimitive& p : primitive_set(spec, 1.0)) {
    const ControlInput u = primitive_control(p, spec, k);
    EXPECT_TRUE(control_in_bounds(u, spec));
    if (u.omega != 0.0) {
      EXPECT_GE(std::abs(u.v / u.omega), spec.min_turning_radius() - 1e-9);
    }
  }
}

TEST(Footprint, CornersAtOrigin) {
  const AgentSpec spec;
  const OrientedRectangle fp = footprint(Pose{0.0, 0.0, 0.0}, spec);
  const Vec2 want[4] = {{-1, -1}, {2, -1}, {2, 1}, {-1, 1}};
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(fp.corners[i].x, want[i].x, 1e-12);
    EXPECT_NEAR(fp.corners[i].y, want[i].y, 1e-12);
  }
}

TEST(Footprint, CornersFacingBackwards) {
  const AgentSpec spec;
  const OrientedRectangle fp = footprint(Pose{0.0, 0.0, kPi}, spec);
  const Vec2 want[4] = {{1, 1}, {-2, 1}, {-2, -1}, {1, -1}};
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(fp.corners[i].x, want[i].x, 1e-12);
    EXPECT_NEAR(fp.corners[i].y, want[i].y, 1e-12);
  }
}

TEST(Footprint, RigidTransformOfOriginBody) {
  const AgentSpec spec;
  const OrientedRectangle base = footprint(Pose{0.0, 0.0, 0.0}, spec);
  const Pose p{5.0, 3.0, kPi / 4.0};
  const OrientedRectangle fp = footprint(p, spec);
  const double c = std::cos(p.yaw), s = std::sin(p.yaw);
  for (int i = 0; i < 4; ++i) {
    const Vec2 b = base.corners[i];
    EXPECT_NEAR(fp.corners[i].x, p.x + c * b.x - s * b.y, 1e-12);
    EXPECT_NEAR(fp.corners[i].y, p.y + s * b.x + c * b.y, 1e-12);
  }
}

TEST(Footprint, AreaAndOrientationInvariant) {
  const AgentSpec spec;
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> pos(-100, 100), yaw(-10, 10);
  for (int i = 0; i < 500; ++i) {
    const OrientedRectangle fp = footprint(Pose{pos(rng), pos(rng), yaw(rng)}, spec);
    double shoelace = 0.0;
    for (int k = 0; k < 4; ++k) {
      const Vec2 a = fp.corners[k], b = fp.corners[(k + 1) % 4];
      shoelace += a.x * b.y - b.x * a.y;
    }
    EXPECT_NEAR(0.5 * shoelace, (spec.front + spec.rear) * spec.width, 1e-9);  // positive: counterclockwise
    EXPECT_NEAR(fp.area(), 6.0, 1e-12);
  }
}

TEST(AgentSpecValidation, RejectsNonsense) {
  AgentSpec spec;
  spec.v_backward_max = 1.0;
  EXPECT_THROW(spec.validate(), std::invalid_argument);
  spec = {};
  spec.sample_time = 0.0;
  EXPECT_THROW(spec.validate(), std::invalid_argument);
}
