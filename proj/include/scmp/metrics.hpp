#pragma once

// Formation quality (angle and coordinate deviation), flowtime and run summaries.

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "scmp/conflict_tree.hpp"

namespace scmp {

/// Inclusive range of sample indices over which formation quality is measured.
struct FormationWindow {
  int first = 0;
  int last = 0;

  int size() const { return last - first + 1; }
  friend bool operator==(const FormationWindow&, const FormationWindow&) = default;
};

/// From the first sample at which every member has left its start pose to the
/// sample before the first arrival; the whole horizon if that range is empty.
inline FormationWindow formation_window(std::span<const Trajectory> group) {
  if (group.empty()) throw std::invalid_argument("formation_window: empty group");
  int h = 0;
  int first_arrival = std::numeric_limits<int>::max();
  int all_left = 0;
  for (const Trajectory& tr : group) {
    h = std::max(h, tr.arrival_step());
    first_arrival = std::min(first_arrival, tr.arrival_step());
    const AgentState& s0 = tr.states.front();
    int left = tr.arrival_step();
    for (int t = 1; t <= tr.arrival_step(); ++t) {
      const AgentState& s = tr.at(t);
      if (s.x != s0.x || s.y != s0.y || s.yaw != s0.yaw) {
        left = t;
        break;
      }
    }
    all_left = std::max(all_left, left);
  }
  const int last = first_arrival - 1;
  if (all_left > last) return {0, h};
  return {all_left, last};
}

/// Mean absolute heading deviation from the group's mean heading, averaged over
/// members and then over the window.
inline double angle_deviation(std::span<const Trajectory> group, FormationWindow w) {
  if (group.empty() || w.size() <= 0) throw std::invalid_argument("angle_deviation: empty group or window");
  double total = 0.0;
  for (int t = w.first; t <= w.last; ++t) {
    const double ref = group[0].at(t).yaw;
    double mean = 0.0;
    for (const Trajectory& tr : group) mean += ref + normalize_angle(tr.at(t).yaw - ref);
    mean /= static_cast<double>(group.size());
    double dev = 0.0;
    for (const Trajectory& tr : group) dev += angle_distance(tr.at(t).yaw, mean);
    total += dev / static_cast<double>(group.size());
  }
  return total / w.size();
}

/// Mean distance of each member from where the shape says it should be, with
/// the shape anchored at each member in turn.
inline double coordinate_deviation(std::span<const Trajectory> group, const RelativeStates& shape,
                                   FormationWindow w) {
  if (group.empty() || w.size() <= 0) throw std::invalid_argument("coordinate_deviation: empty group or window");
  if (group.size() != shape.size()) throw std::invalid_argument("coordinate_deviation: group size differs from shape");
  const std::size_t m = group.size();
  double total = 0.0;
  for (int t = w.first; t <= w.last; ++t) {
    double per_t = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const Vec2 anchor = group[i].at(t).position() - shape.offsets[i];
      double per_i = 0.0;
      for (std::size_t j = 0; j < m; ++j) per_i += norm(group[j].at(t).position() - (anchor + shape.offsets[j]));
      per_t += per_i / static_cast<double>(m);
    }
    total += per_t / static_cast<double>(m);
  }
  return total / w.size();
}

inline double avg_flowtime(std::span<const Trajectory> solution, double sample_time) {
  if (solution.empty()) return 0.0;
  return cost_sum(solution, sample_time) / static_cast<double>(solution.size());
}

struct GroupMetrics {
  std::size_t stage = 0;
  std::size_t group = 0;
  FormationWindow window;
  double ad_rad = 0.0;
  double cd_m = 0.0;
};

struct RunMetrics {
  bool success = false;
  double runtime_s = 0.0;
  double avg_flowtime_s = 0.0;
  std::size_t low_level_nodes = 0;
  std::size_t high_level_nodes = 0;
  double ad_rad = std::numeric_limits<double>::quiet_NaN();  // mean over groups; NaN without groups
  double cd_m = std::numeric_limits<double>::quiet_NaN();
  std::vector<GroupMetrics> groups;
};

inline std::vector<Trajectory> group_trajectories(const GroupSpec& g, std::span<const Trajectory> solution) {
  std::vector<Trajectory> out;
  out.reserve(g.members.size());
  for (AgentId a : g.members) out.push_back(solution[a]);
  return out;
}

/// Metrics of a (possibly multi-stage) run. Flowtime adds each agent's arrival
/// times across stages.
inline RunMetrics compute_metrics(const Scenario& s, const StagesResult& r) {
  RunMetrics m;
  m.success = r.ok();
  const PlanStats totals = r.totals();
  m.runtime_s = totals.runtime_s;
  m.low_level_nodes = totals.low_level_nodes;
  m.high_level_nodes = totals.high_level_nodes;
  if (!m.success) return m;

  std::vector<double> per_agent(s.agent_count(), 0.0);
  double ad = 0.0;
  double cd = 0.0;
  for (std::size_t st = 0; st < r.stages.size(); ++st) {
    const auto& sol = r.stages[st].trajectories;
    for (std::size_t a = 0; a < sol.size(); ++a) per_agent[a] += sol[a].arrival_step() * s.spec.sample_time;
    const Stage& stage = s.stages[st];
    for (std::size_t g = 0; g < stage.groups.size(); ++g) {
      const std::vector<Trajectory> grp = group_trajectories(stage.groups[g], sol);
      GroupMetrics gm;
      gm.stage = st;
      gm.group = g;
      gm.window = formation_window(grp);
      gm.ad_rad = angle_deviation(grp, gm.window);
      gm.cd_m = coordinate_deviation(grp, stage.groups[g].shape, gm.window);
      ad += gm.ad_rad;
      cd += gm.cd_m;
      m.groups.push_back(gm);
    }
  }
  double sum = 0.0;
  for (double v : per_agent) sum += v;
  m.avg_flowtime_s = per_agent.empty() ? 0.0 : sum / static_cast<double>(per_agent.size());
  if (!m.groups.empty()) {
    m.ad_rad = ad / static_cast<double>(m.groups.size());
    m.cd_m = cd / static_cast<double>(m.groups.size());
  }
  return m;
}

}  // namespace scmp
