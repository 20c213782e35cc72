#pragma once

#include <cmath>
#include <vector>

#include "scmp/scmp.hpp"

namespace scmp::testing {

inline World empty_world(double w, double h) {
  World world;
  world.width = w;
  world.height = h;
  return world;
}

// Constant-control trajectory of n samples.
inline Trajectory drive(const AgentState& start, ControlInput u, int n, const AgentSpec& spec) {
  Trajectory tr;
  tr.states.push_back(start);
  for (int k = 0; k < n; ++k) {
    tr.controls.push_back(u);
    tr.states.push_back(step(tr.states.back(), u, spec));
  }
  return tr;
}

// Trajectory that stays put for n samples.
inline Trajectory parked(const Pose& p, int n) {
  Trajectory tr;
  tr.states.push_back(at_time(p, 0));
  for (int k = 0; k < n; ++k) {
    tr.controls.push_back({0.0, 0.0});
    tr.states.push_back(at_time(p, k + 1));
  }
  return tr;
}

inline double path_length(const Trajectory& tr) {
  double len = 0.0;
  for (std::size_t k = 1; k < tr.states.size(); ++k)
    len += std::hypot(tr.states[k].x - tr.states[k - 1].x, tr.states[k].y - tr.states[k - 1].y);
  return len;
}

// Every stored state follows from its predecessor and control.
inline double worst_replay_error(const Trajectory& tr, const AgentSpec& spec) {
  double worst = 0.0;
  for (std::size_t k = 0; k < tr.controls.size(); ++k) {
    const AgentState n = step(tr.states[k], tr.controls[k], spec);
    worst = std::max({worst, std::abs(n.x - tr.states[k + 1].x), std::abs(n.y - tr.states[k + 1].y),
                      angle_distance(n.yaw, tr.states[k + 1].yaw)});
  }
  return worst;
}

inline Scenario single_stage(World world, std::vector<Pose> starts, std::vector<Pose> goals,
                             std::vector<GroupSpec> groups, std::vector<AgentId> outliers) {
  Scenario s;
  s.world = std::move(world);
  s.starts = std::move(starts);
  Stage st;
  st.groups = std::move(groups);
  st.outliers = std::move(outliers);
  st.goals = std::move(goals);
  s.stages.push_back(std::move(st));
  return s;
}

}  // namespace scmp::testing
