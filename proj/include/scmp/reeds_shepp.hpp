#pragma once

// Shortest minimum-turning-radius paths with forward and backward motion
// (Reeds & Shepp 1990, with the formula corrections used in OMPL).

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "scmp/model.hpp"

namespace scmp::rs {

enum class Seg { nop, left, straight, right };

struct Path {
  std::array<Seg, 5> types{Seg::nop, Seg::nop, Seg::nop, Seg::nop, Seg::nop};
  std::array<double, 5> lengths{};  // normalised by the radius; sign = direction of travel
  double radius = 1.0;
  int slot = -1;  // candidate that produced it

  double normalized_length() const {
    double l = 0.0;
    for (double v : lengths) l += std::abs(v);
    return l;
  }
  double length() const { return normalized_length() * radius; }
  bool valid() const { return std::isfinite(normalized_length()); }
};

namespace detail {

inline constexpr double kZero = 10.0 * std::numeric_limits<double>::epsilon();
inline constexpr double kHalfPi = kPi / 2.0;

constexpr Seg L = Seg::left, S = Seg::straight, R = Seg::right, N = Seg::nop;

inline constexpr std::array<std::array<Seg, 5>, 18> kTypes{{
    {L, R, L, N, N}, {R, L, R, N, N}, {L, R, L, R, N}, {R, L, R, L, N}, {L, R, S, L, N}, {R, L, S, R, N},
    {L, S, R, L, N}, {R, S, L, R, N}, {L, R, S, R, N}, {R, L, S, L, N}, {R, S, R, L, N}, {L, S, L, R, N},
    {L, S, R, N, N}, {R, S, L, N, N}, {L, S, L, N, N}, {R, S, R, N, N}, {L, R, S, L, R}, {R, L, S, R, L},
}};

inline double mod2pi(double x) {
  double v = std::fmod(x, kTwoPi);
  if (v < -kPi)
    v += kTwoPi;
  else if (v > kPi)
    v -= kTwoPi;
  return v;
}

inline void polar(double x, double y, double& r, double& theta) {
  r = std::sqrt(x * x + y * y);
  theta = std::atan2(y, x);
}

inline void tau_omega(double u, double v, double xi, double eta, double phi, double& tau, double& omega) {
  const double delta = mod2pi(u - v);
  const double a = std::sin(u) - std::sin(delta);
  const double b = std::cos(u) - std::cos(delta) - 1.0;
  const double t1 = std::atan2(eta * a - xi * b, xi * a + eta * b);
  const double t2 = 2.0 * (std::cos(delta) - std::cos(v) - std::cos(u)) + 3.0;
  tau = (t2 < 0.0) ? mod2pi(t1 + kPi) : mod2pi(t1);
  omega = mod2pi(tau - u + v - phi);
}

inline bool LpSpLp(double x, double y, double phi, double& t, double& u, double& v) {
  polar(x - std::sin(phi), y - 1.0 + std::cos(phi), u, t);
  if (t >= -kZero) {
    v = mod2pi(phi - t);
    if (v >= -kZero) return true;
  }
  return false;
}

inline bool LpSpRp(double x, double y, double phi, double& t, double& u, double& v) {
  double t1, u1;
  polar(x + std::sin(phi), y - 1.0 - std::cos(phi), u1, t1);
  u1 = u1 * u1;
  if (u1 >= 4.0) {
    u = std::sqrt(u1 - 4.0);
    const double theta = std::atan2(2.0, u);
    t = mod2pi(t1 + theta);
    v = mod2pi(t - phi);
    return t >= -kZero && v >= -kZero;
  }
  return false;
}

inline bool LpRmL(double x, double y, double phi, double& t, double& u, double& v) {
  const double xi = x - std::sin(phi);
  const double eta = y - 1.0 + std::cos(phi);
  double u1, theta;
  polar(xi, eta, u1, theta);
  if (u1 <= 4.0) {
    u = -2.0 * std::asin(0.25 * u1);
    t = mod2pi(theta + 0.5 * u + kPi);
    v = mod2pi(phi - t + u);
    return t >= -kZero && u <= kZero;
  }
  return false;
}

inline bool LpRupLumRm(double x, double y, double phi, double& t, double& u, double& v) {
  const double xi = x + std::sin(phi);
  const double eta = y - 1.0 - std::cos(phi);
  const double rho = 0.25 * (2.0 + std::sqrt(xi * xi + eta * eta));
  if (rho <= 1.0) {
    u = std::acos(rho);
    tau_omega(u, -u, xi, eta, phi, t, v);
    return t >= -kZero && v <= kZero;
  }
  return false;
}

inline bool LpRumLumRp(double x, double y, double phi, double& t, double& u, double& v) {
  const double xi = x + std::sin(phi);
  const double eta = y - 1.0 - std::cos(phi);
  const double rho = (20.0 - xi * xi - eta * eta) / 16.0;
  if (rho >= 0.0 && rho <= 1.0) {
    u = -std::acos(rho);
    if (u >= -0.5 * kPi) {
      tau_omega(u, u, xi, eta, phi, t, v);
      return t >= -kZero && v >= -kZero;
    }
  }
  return false;
}

inline bool LpRmSmLm(double x, double y, double phi, double& t, double& u, double& v) {
  const double xi = x - std::sin(phi);
  const double eta = y - 1.0 + std::cos(phi);
  double rho, theta;
  polar(xi, eta, rho, theta);
  if (rho >= 2.0) {
    const double r = std::sqrt(rho * rho - 4.0);
    u = 2.0 - r;
    t = mod2pi(theta + std::atan2(r, -2.0));
    v = mod2pi(phi - 0.5 * kPi - t);
    return t >= -kZero && u <= kZero && v <= kZero;
  }
  return false;
}

inline bool LpRmSmRm(double x, double y, double phi, double& t, double& u, double& v) {
  const double xi = x + std::sin(phi);
  const double eta = y - 1.0 - std::cos(phi);
  double rho, theta;
  polar(-eta, xi, rho, theta);
  if (rho >= 2.0) {
    t = theta;
    u = 2.0 - rho;
    v = mod2pi(t + 0.5 * kPi - phi);
    return t >= -kZero && u <= kZero && v <= kZero;
  }
  return false;
}

inline bool LpRmSLmRp(double x, double y, double phi, double& t, double& u, double& v) {
  const double xi = x + std::sin(phi);
  const double eta = y - 1.0 - std::cos(phi);
  double rho, theta;
  polar(xi, eta, rho, theta);
  if (rho >= 2.0) {
    u = 4.0 - std::sqrt(rho * rho - 4.0);
    if (u <= kZero) {
      t = mod2pi(std::atan2((4.0 - u) * xi - 2.0 * eta, -2.0 * xi + (u - 4.0) * eta));
      v = mod2pi(t - phi);
      return t >= -kZero && v >= -kZero;
    }
  }
  return false;
}

class Search {
 public:
  Path best;
  double best_len = std::numeric_limits<double>::infinity();
  int only = -1;  // restrict to one candidate slot

  // Counts every candidate formula, so a slot names the same word and
  // symmetry variant for any query.
  bool want() {
    current_ = next_++;
    return only < 0 || current_ == only;
  }

  void offer(int type, std::array<double, 5> lengths) {
    double l = 0.0;
    for (double v : lengths) l += std::abs(v);
    if (l < best_len) {
      best_len = l;
      best.types = kTypes[static_cast<std::size_t>(type)];
      best.lengths = lengths;
      best.slot = current_;
    }
  }


  void csc(double x, double y, double phi) {
    double t, u, v;
    if (want() && LpSpLp(x, y, phi, t, u, v)) offer(14, {t, u, v, 0, 0});
    if (want() && LpSpLp(-x, y, -phi, t, u, v)) offer(14, {-t, -u, -v, 0, 0});
    if (want() && LpSpLp(x, -y, -phi, t, u, v)) offer(15, {t, u, v, 0, 0});
    if (want() && LpSpLp(-x, -y, phi, t, u, v)) offer(15, {-t, -u, -v, 0, 0});
    if (want() && LpSpRp(x, y, phi, t, u, v)) offer(12, {t, u, v, 0, 0});
    if (want() && LpSpRp(-x, y, -phi, t, u, v)) offer(12, {-t, -u, -v, 0, 0});
    if (want() && LpSpRp(x, -y, -phi, t, u, v)) offer(13, {t, u, v, 0, 0});
    if (want() && LpSpRp(-x, -y, phi, t, u, v)) offer(13, {-t, -u, -v, 0, 0});
  }

  void ccc(double x, double y, double phi) {
    double t, u, v;
    if (want() && LpRmL(x, y, phi, t, u, v)) offer(0, {t, u, v, 0, 0});
    if (want() && LpRmL(-x, y, -phi, t, u, v)) offer(0, {-t, -u, -v, 0, 0});
    if (want() && LpRmL(x, -y, -phi, t, u, v)) offer(1, {t, u, v, 0, 0});
    if (want() && LpRmL(-x, -y, phi, t, u, v)) offer(1, {-t, -u, -v, 0, 0});
    const double xb = x * std::cos(phi) + y * std::sin(phi);
    const double yb = x * std::sin(phi) - y * std::cos(phi);
    if (want() && LpRmL(xb, yb, phi, t, u, v)) offer(0, {v, u, t, 0, 0});
    if (want() && LpRmL(-xb, yb, -phi, t, u, v)) offer(0, {-v, -u, -t, 0, 0});
    if (want() && LpRmL(xb, -yb, -phi, t, u, v)) offer(1, {v, u, t, 0, 0});
    if (want() && LpRmL(-xb, -yb, phi, t, u, v)) offer(1, {-v, -u, -t, 0, 0});
  }

  void cccc(double x, double y, double phi) {
    double t, u, v;
    if (want() && LpRupLumRm(x, y, phi, t, u, v)) offer(2, {t, u, -u, v, 0});
    if (want() && LpRupLumRm(-x, y, -phi, t, u, v)) offer(2, {-t, -u, u, -v, 0});
    if (want() && LpRupLumRm(x, -y, -phi, t, u, v)) offer(3, {t, u, -u, v, 0});
    if (want() && LpRupLumRm(-x, -y, phi, t, u, v)) offer(3, {-t, -u, u, -v, 0});
    if (want() && LpRumLumRp(x, y, phi, t, u, v)) offer(2, {t, u, u, v, 0});
    if (want() && LpRumLumRp(-x, y, -phi, t, u, v)) offer(2, {-t, -u, -u, -v, 0});
    if (want() && LpRumLumRp(x, -y, -phi, t, u, v)) offer(3, {t, u, u, v, 0});
    if (want() && LpRumLumRp(-x, -y, phi, t, u, v)) offer(3, {-t, -u, -u, -v, 0});
  }

  void ccsc(double x, double y, double phi) {
    double t, u, v;
    const double h = kHalfPi;
    if (want() && LpRmSmLm(x, y, phi, t, u, v)) offer(4, {t, -h, u, v, 0});
    if (want() && LpRmSmLm(-x, y, -phi, t, u, v)) offer(4, {-t, h, -u, -v, 0});
    if (want() && LpRmSmLm(x, -y, -phi, t, u, v)) offer(5, {t, -h, u, v, 0});
    if (want() && LpRmSmLm(-x, -y, phi, t, u, v)) offer(5, {-t, h, -u, -v, 0});
    if (want() && LpRmSmRm(x, y, phi, t, u, v)) offer(8, {t, -h, u, v, 0});
    if (want() && LpRmSmRm(-x, y, -phi, t, u, v)) offer(8, {-t, h, -u, -v, 0});
    if (want() && LpRmSmRm(x, -y, -phi, t, u, v)) offer(9, {t, -h, u, v, 0});
    if (want() && LpRmSmRm(-x, -y, phi, t, u, v)) offer(9, {-t, h, -u, -v, 0});
    const double xb = x * std::cos(phi) + y * std::sin(phi);
    const double yb = x * std::sin(phi) - y * std::cos(phi);
    if (want() && LpRmSmLm(xb, yb, phi, t, u, v)) offer(6, {v, u, -h, t, 0});
    if (want() && LpRmSmLm(-xb, yb, -phi, t, u, v)) offer(6, {-v, -u, h, -t, 0});
    if (want() && LpRmSmLm(xb, -yb, -phi, t, u, v)) offer(7, {v, u, -h, t, 0});
    if (want() && LpRmSmLm(-xb, -yb, phi, t, u, v)) offer(7, {-v, -u, h, -t, 0});
    if (want() && LpRmSmRm(xb, yb, phi, t, u, v)) offer(10, {v, u, -h, t, 0});
    if (want() && LpRmSmRm(-xb, yb, -phi, t, u, v)) offer(10, {-v, -u, h, -t, 0});
    if (want() && LpRmSmRm(xb, -yb, -phi, t, u, v)) offer(11, {v, u, -h, t, 0});
    if (want() && LpRmSmRm(-xb, -yb, phi, t, u, v)) offer(11, {-v, -u, h, -t, 0});
  }

  void ccscc(double x, double y, double phi) {
    double t, u, v;
    const double h = kHalfPi;
    if (want() && LpRmSLmRp(x, y, phi, t, u, v)) offer(16, {t, -h, u, -h, v});
    if (want() && LpRmSLmRp(-x, y, -phi, t, u, v)) offer(16, {-t, h, -u, h, -v});
    if (want() && LpRmSLmRp(x, -y, -phi, t, u, v)) offer(17, {t, -h, u, -h, v});
    if (want() && LpRmSLmRp(-x, -y, phi, t, u, v)) offer(17, {-t, h, -u, h, -v});
  }

 private:
  int next_ = 0;
  int current_ = -1;
};

}  // namespace detail

/// Shortest path from `from` to `to` for turning radius `radius`. A
/// non-negative `only_slot` keeps only that candidate word.
inline Path shortest_path(const Pose& from, const Pose& to, double radius, int only_slot = -1) {
  const double dx = to.x - from.x;
  const double dy = to.y - from.y;
  const double c = std::cos(from.yaw);
  const double s = std::sin(from.yaw);
  const double x = (c * dx + s * dy) / radius;
  const double y = (-s * dx + c * dy) / radius;
  const double phi = to.yaw - from.yaw;

  detail::Search search;
  search.only = only_slot;
  search.csc(x, y, phi);
  search.ccc(x, y, phi);
  search.cccc(x, y, phi);
  search.ccsc(x, y, phi);
  search.ccscc(x, y, phi);
  Path p = search.best;
  p.radius = radius;
  return p;
}

inline double distance(const Pose& from, const Pose& to, double radius) {
  return shortest_path(from, to, radius).length();
}

/// Pose after travelling signed normalised length `len` along one segment.
inline Pose advance(const Pose& p, Seg type, double len, double radius) {
  const double phi = p.yaw;
  switch (type) {
    case Seg::left:
      return {p.x + radius * (std::sin(phi + len) - std::sin(phi)),
              p.y + radius * (-std::cos(phi + len) + std::cos(phi)), phi + len};
    case Seg::right:
      return {p.x + radius * (-std::sin(phi - len) + std::sin(phi)),
              p.y + radius * (std::cos(phi - len) - std::cos(phi)), phi - len};
    case Seg::straight:
      return {p.x + radius * len * std::cos(phi), p.y + radius * len * std::sin(phi), phi};
    case Seg::nop:
      break;
  }
  return p;
}

/// Pose at arc length `s` (metres) along the path; yaw is not normalised.
inline Pose sample(const Pose& from, const Path& path, double s) {
  Pose p = from;
  double remaining = s / path.radius;
  for (std::size_t i = 0; i < 5 && remaining > 0.0; ++i) {
    if (path.types[i] == Seg::nop) break;
    const double seg = std::abs(path.lengths[i]);
    const double take = std::min(seg, remaining);
    p = advance(p, path.types[i], path.lengths[i] < 0.0 ? -take : take, path.radius);
    remaining -= take;
  }
  return p;
}

/// End pose after all segments (yaw normalised).
inline Pose end_pose(const Pose& from, const Path& path) {
  Pose p = from;
  for (std::size_t i = 0; i < 5; ++i) {
    if (path.types[i] == Seg::nop) break;
    p = advance(p, path.types[i], path.lengths[i], path.radius);
  }
  p.yaw = normalize_angle(p.yaw);
  return p;
}

}  // namespace scmp::rs
