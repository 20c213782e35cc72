#pragma once

// Independent feasibility audit of a finished run. Uses only the world and
// vehicle model: static collisions and pairwise body overlap on a T_s/5 grid,
// one-sample reproduction of every state from its control, control limits,
// turning radius, start/goal agreement and stage continuity.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "scmp/conflict_tree.hpp"

namespace scmp {

struct AuditOptions {
  double tolerance = 1e-6;
  // Half-width of the rounding applied to every stored number (5e-7 for
  // six-decimal files, 0 for in-memory solutions). Widens each bound by the
  // worst-case effect of that rounding.
  double quantum = 0.0;
  int substeps = 5;
  std::size_t max_messages = 20;
};

struct AuditReport {
  std::size_t static_collisions = 0;
  std::size_t body_conflicts = 0;
  std::size_t dynamics_errors = 0;
  std::size_t radius_violations = 0;
  std::size_t control_violations = 0;
  std::size_t structure_errors = 0;  // timing, starts, goals, stage continuity
  double worst_residual = 0.0;
  double min_radius = std::numeric_limits<double>::infinity();
  std::vector<std::string> messages;

  std::size_t total() const {
    return static_collisions + body_conflicts + dynamics_errors + radius_violations + control_violations +
           structure_errors;
  }
  bool ok() const { return total() == 0; }
};

namespace audit_detail {

// Pose between samples k and k+1 (held after the last sample).
inline Pose between(const Trajectory& tr, int k, int sub, int substeps) {
  const int last = static_cast<int>(tr.states.size()) - 1;
  if (k >= last) return tr.states.back().pose();
  const AgentState& a = tr.states[static_cast<std::size_t>(k)];
  const AgentState& b = tr.states[static_cast<std::size_t>(k + 1)];
  const double f = static_cast<double>(sub) / substeps;
  double dyaw = std::fmod(b.yaw - a.yaw, 2.0 * std::numbers::pi);
  if (dyaw > std::numbers::pi) dyaw -= 2.0 * std::numbers::pi;
  if (dyaw < -std::numbers::pi) dyaw += 2.0 * std::numbers::pi;
  return {a.x + f * (b.x - a.x), a.y + f * (b.y - a.y), a.yaw + f * dyaw};
}

inline double wrapped(double a) {
  a = std::fmod(a, 2.0 * std::numbers::pi);
  if (a > std::numbers::pi) a -= 2.0 * std::numbers::pi;
  if (a < -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

}  // namespace audit_detail

/// Audits one stage. `starts` are the poses every trajectory must begin at.
inline void audit_stage(const World& world, const AgentSpec& spec, std::span<const Pose> starts,
                        std::span<const Pose> goals, double goal_tol, double goal_yaw_tol,
                        std::span<const Trajectory> sol, std::size_t stage, const AuditOptions& opt,
                        AuditReport& rep) {
  using audit_detail::between;
  auto note = [&](std::size_t& counter, const std::string& msg) {
    ++counter;
    if (rep.messages.size() < opt.max_messages) rep.messages.push_back(fmt::format("stage {}: {}", stage, msg));
  };
  const double ts = spec.sample_time;
  const double q = opt.quantum;
  const double tol = opt.tolerance;
  const double r_min = spec.wheelbase / std::tan(spec.phi_max);

  if (sol.size() != starts.size()) {
    note(rep.structure_errors, fmt::format("{} trajectories for {} agents", sol.size(), starts.size()));
    return;
  }

  for (std::size_t a = 0; a < sol.size(); ++a) {
    const Trajectory& tr = sol[a];
    if (tr.states.empty() || tr.controls.size() + 1 != tr.states.size()) {
      note(rep.structure_errors, fmt::format("agent {}: {} states but {} controls", a, tr.states.size(),
                                             tr.controls.size()));
      continue;
    }
    for (std::size_t k = 0; k < tr.states.size(); ++k)
      if (tr.states[k].t != static_cast<int>(k)) {
        note(rep.structure_errors, fmt::format("agent {}: record {} has time index {}", a, k, tr.states[k].t));
        break;
      }
    const AgentState& s0 = tr.states.front();
    if (std::abs(s0.x - starts[a].x) > tol + 2 * q || std::abs(s0.y - starts[a].y) > tol + 2 * q ||
        std::abs(audit_detail::wrapped(s0.yaw - starts[a].yaw)) > tol + 2 * q)
      note(rep.structure_errors, fmt::format("agent {}: does not begin at its start pose", a));
    const AgentState& end = tr.states.back();
    if (std::hypot(end.x - goals[a].x, end.y - goals[a].y) > goal_tol + tol + 2 * q ||
        std::abs(audit_detail::wrapped(end.yaw - goals[a].yaw)) > goal_yaw_tol + tol + 2 * q)
      note(rep.structure_errors, fmt::format("agent {}: final pose ({:.3f}, {:.3f}, {:.3f}) misses its goal", a,
                                             end.x, end.y, end.yaw));

    for (std::size_t k = 0; k + 1 < tr.states.size(); ++k) {
      const AgentState& s = tr.states[k];
      const AgentState& n = tr.states[k + 1];
      const ControlInput& u = tr.controls[k];
      const double v = u.v;
      const double w = u.omega;

      // Rounding of x_k, x_{k+1}, v and yaw_k bounds the file-level residual.
      const double pos_slack = tol + q * (2.0 + ts + ts * std::abs(v));
      const double yaw_slack = tol + q * (2.0 + ts);
      const double ex = std::abs(n.x - (s.x + ts * v * std::cos(s.yaw)));
      const double ey = std::abs(n.y - (s.y + ts * v * std::sin(s.yaw)));
      const double eyaw = std::abs(audit_detail::wrapped(n.yaw - (s.yaw + ts * w)));
      rep.worst_residual = std::max({rep.worst_residual, ex, ey, eyaw});
      if (ex > pos_slack || ey > pos_slack || eyaw > yaw_slack)
        note(rep.dynamics_errors,
             fmt::format("agent {}: step {} not reproduced by its control (residual {:.3g}, {:.3g}, {:.3g})", a, k,
                         ex, ey, eyaw));

      if (v > spec.v_forward_max + tol + q || v < spec.v_backward_max - tol - q)
        note(rep.control_violations, fmt::format("agent {}: step {} speed {:.6f} outside limits", a, k, v));

      if (std::abs(w) > tol + q) {
        const double radius = std::abs(v) / std::abs(w);
        rep.min_radius = std::min(rep.min_radius, radius);
        // Largest radius consistent with the rounded values.
        const double best = (std::abs(v) + q) / std::max(std::abs(w) - q, 1e-300);
        if (best < r_min - tol)
          note(rep.radius_violations,
               fmt::format("agent {}: step {} turning radius {:.6f} below {:.6f}", a, k, radius, r_min));
      }
    }

    for (std::size_t k = 0; k < tr.states.size(); ++k)
      for (int sub = 0; sub < (k + 1 < tr.states.size() ? opt.substeps : 1); ++sub) {
        const Pose p = between(tr, static_cast<int>(k), sub, opt.substeps);
        if (collides_static(footprint(p, spec), world)) {
          note(rep.static_collisions,
               fmt::format("agent {}: static collision at t = {:.2f} s", a, (k + sub / double(opt.substeps)) * ts));
          k = tr.states.size();
          break;
        }
      }
  }

  int h = 0;
  for (const Trajectory& tr : sol) h = std::max(h, static_cast<int>(tr.states.size()) - 1);
  for (std::size_t a = 0; a < sol.size(); ++a)
    for (std::size_t b = a + 1; b < sol.size(); ++b) {
      if (sol[a].states.empty() || sol[b].states.empty()) continue;
      bool found = false;
      for (int k = 0; k <= h && !found; ++k)
        for (int sub = 0; sub < (k < h ? opt.substeps : 1) && !found; ++sub) {
          const Pose pa = between(sol[a], k, sub, opt.substeps);
          const Pose pb = between(sol[b], k, sub, opt.substeps);
          if (bodies_overlap(pa, spec, pb, spec)) {
            note(rep.body_conflicts, fmt::format("agents {} and {}: bodies overlap at t = {:.2f} s", a, b,
                                                 (k + sub / double(opt.substeps)) * ts));
            found = true;
          }
        }
    }
}

/// Audits every stage of a run; stage s > 0 must start exactly where stage
/// s - 1 ended.
inline AuditReport audit_run(const Scenario& s, std::span<const std::vector<Trajectory>> stages,
                             const AuditOptions& opt = {}) {
  AuditReport rep;
  if (stages.size() != s.stages.size()) {
    ++rep.structure_errors;
    rep.messages.push_back(fmt::format("{} stages in solution, {} in scenario", stages.size(), s.stages.size()));
    return rep;
  }
  std::vector<Pose> starts = s.starts;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    audit_stage(s.world, s.spec, starts, s.stages[i].goals, s.config.search.goal_position_tolerance,
                s.config.search.goal_yaw_tolerance, stages[i], i, opt, rep);
    if (stages[i].size() != starts.size()) break;
    for (std::size_t a = 0; a < starts.size(); ++a)
      if (!stages[i][a].states.empty()) starts[a] = stages[i][a].states.back().pose();
  }
  return rep;
}

}  // namespace scmp
