#pragma once

// Cooperative hybrid A*: leaderless lock-step search for a group that keeps
// the members close to a relative-position shape.

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "scmp/search_single.hpp"

namespace scmp {

/// Member offsets relative to member 0 (offsets[0] is always (0, 0)).
struct RelativeStates {
  std::vector<Vec2> offsets;

  std::size_t size() const { return offsets.size(); }

  void validate() const {
    if (offsets.empty()) throw std::invalid_argument("relative states: no offsets");
    if (offsets[0].x != 0.0 || offsets[0].y != 0.0)
      throw std::invalid_argument("relative states: offsets[0] must be (0, 0)");
  }

  /// Largest distance between two member slots.
  double diameter() const {
    double d = 0.0;
    for (std::size_t a = 0; a < offsets.size(); ++a)
      for (std::size_t b = a + 1; b < offsets.size(); ++b) d = std::max(d, norm(offsets[a] - offsets[b]));
    return d;
  }

  friend bool operator==(const RelativeStates&, const RelativeStates&) = default;
};

struct CshaConfig {
  double angle_weight_d = 1.0;
  double closest_reward_r = 0.3;
  double remote_threshold = 5.0;  // metres; two primitive arcs at default speeds
  int max_consecutive_waits = 8;  // first-agent holds in a row before it must move; 0 = unlimited
  bool reward_requires_progress = true;  // reward only a child nearer the ideal than its parent
  double analytic_range = 10.0;  // metres; members try analytic connections only this close to the goal
  double wait_cost_factor = 0.1;  // members' wait cost relative to a forward arc
  bool time_aligned_ideal = true;  // place a member's ideal at its own child time on the first agent's branch

  void validate() const {
    if (!(closest_reward_r > 0.0 && closest_reward_r < 1.0))
      throw std::invalid_argument("csha: closest_reward_r must lie in (0, 1)");
    if (!(remote_threshold > 0.0)) throw std::invalid_argument("csha: remote_threshold must be > 0");
    if (!(angle_weight_d >= 0.0)) throw std::invalid_argument("csha: angle_weight_d must be >= 0");
    if (!(wait_cost_factor > 0.0)) throw std::invalid_argument("csha: wait_cost_factor must be > 0");
    if (max_consecutive_waits < 0) throw std::invalid_argument("csha: max_consecutive_waits must be >= 0");
  }
};

/// Unfinished member whose latest position is closest to its own goal; ties
/// go to the lower index. Empty when everyone is finished.
inline std::optional<std::size_t> first_agent_cal(std::span<const AgentState> latest, std::span<const Pose> goals,
                                                  std::span<const char> finished = {}) {
  std::optional<std::size_t> best;
  double best_d = 0.0;
  for (std::size_t j = 0; j < latest.size(); ++j) {
    if (!finished.empty() && finished[j]) continue;
    const double d = norm(latest[j].position() - Vec2{goals[j].x, goals[j].y});
    if (!best || d < best_d) {
      best = j;
      best_d = d;
    }
  }
  return best;
}

inline std::vector<Pose> ideal_states_cal(const Pose& first, std::size_t k, const RelativeStates& r) {
  if (k >= r.size()) throw std::out_of_range("ideal_states_cal: member index out of range");
  const double dx = first.x - r.offsets[k].x;
  const double dy = first.y - r.offsets[k].y;
  std::vector<Pose> ideal(r.size());
  for (std::size_t j = 0; j < r.size(); ++j) ideal[j] = {r.offsets[j].x + dx, r.offsets[j].y + dy, first.yaw};
  ideal[k] = first;
  return ideal;
}

/// Squared planar distance plus weighted yaw difference (in [0, pi]).
inline double shape_distance(const Pose& node, const Pose& ideal, double d) {
  const double dx = node.x - ideal.x;
  const double dy = node.y - ideal.y;
  return dx * dx + dy * dy + d * angle_distance(node.yaw, ideal.yaw);
}

/// True when the first agent has run too far ahead of the group.
inline bool remote_dis(std::span<const AgentState> latest, std::span<const Pose> ideal_prev, std::size_t first,
                       const RelativeStates& r, const CshaConfig& cfg) {
  double lag = 0.0;
  double spread = 0.0;
  for (std::size_t j = 0; j < latest.size(); ++j) {
    if (j == first) continue;
    lag = std::max(lag, norm(latest[j].position() - Vec2{ideal_prev[j].x, ideal_prev[j].y}));
    spread = std::max(spread, norm(latest[j].position() - latest[first].position()));
  }
  return lag > cfg.remote_threshold || spread > r.diameter() + cfg.remote_threshold;
}

/// Index of the child closest to `ideal` (lowest primitive index on ties),
/// or children.size() when there are none.
inline std::size_t closest_child(std::span<const ChildCandidate> children, const Pose& ideal, double d) {
  std::size_t best = children.size();
  double best_d = 0.0;
  for (std::size_t c = 0; c < children.size(); ++c) {
    const double dist = shape_distance(children[c].node.state.pose(), ideal, d);
    if (best == children.size() || dist < best_d) {
      best = c;
      best_d = dist;
    }
  }
  return best;
}

inline void apply_reward(ChildCandidate& c, double r) {
  c.node.g *= r;
  c.node.f = c.node.g + c.node.h;
}

/// Feasible children of a non-first member; the one closest to its ideal pose
/// has its g scaled by the reward.
inline std::vector<ChildCandidate> get_childnode_heuristic(AgentSearch& search, int current, const Pose& ideal,
                                                           const CshaConfig& cfg) {
  std::vector<ChildCandidate> children = search.feasible_children(current);
  const std::size_t best = closest_child(children, ideal, cfg.angle_weight_d);
  if (best < children.size()) apply_reward(children[best], cfg.closest_reward_r);
  return children;
}

struct GroupResult {
  SearchStatus status = SearchStatus::exhausted;
  std::vector<Trajectory> trajectories;
  std::size_t neighbors = 0;
  std::size_t batches = 0;

  bool ok() const { return status == SearchStatus::success; }
};

/// Observer hook for tests: called after each batch with the first agent and
/// whether it was held back.
struct BatchTrace {
  std::size_t batch = 0;
  std::size_t first_agent = 0;
  bool waited = false;
};

inline GroupResult plan_group(std::span<const AgentId> members, std::span<const AgentState> starts,
                              std::span<const Pose> goals, const AgentSpec& spec, const World& world,
                              std::span<const ConstraintSet> constraints, const RelativeStates& shape,
                              const CshaConfig& ccfg, const SearchConfig& scfg, Heuristic& heuristic,
                              const Deadline& deadline = {}, const TrafficIndex* traffic = nullptr,
                              std::vector<BatchTrace>* trace = nullptr) {
  const std::size_t m = members.size();
  if (starts.size() != m || goals.size() != m || constraints.size() != m || shape.size() != m)
    throw std::invalid_argument("plan_group: member, start, goal, constraint and shape counts differ");

  SearchConfig member_cfg = scfg;
  if (m > 1) {
    member_cfg.analytic_max_length = ccfg.analytic_range;
    member_cfg.wait_cost_factor = ccfg.wait_cost_factor;
  }
  std::vector<AgentSearch> searches;
  searches.reserve(m);
  for (std::size_t j = 0; j < m; ++j)
    searches.emplace_back(members[j], starts[j], goals[j], spec, world, constraints[j], member_cfg, heuristic);
  for (AgentSearch& s : searches) s.set_traffic(traffic);

  std::vector<AgentState> latest(starts.begin(), starts.end());
  std::vector<char> finished(m, 0);
  bool none_finished = true;
  int waits_in_row = 0;
  GroupResult result;

  auto neighbor_total = [&] {
    std::size_t n = 0;
    for (const AgentSearch& s : searches) n += s.neighbors();
    return n;
  };
  auto on_finish = [&](std::size_t j) {
    finished[j] = 1;
    none_finished = false;
    const AgentState fin = searches[j].final_state();
    latest[j] = fin;
    for (std::size_t o = 0; o < m; ++o)
      if (o != j && !finished[o]) searches[o].avoidance().add_parked(fin.pose(), fin.t, spec);
  };
  auto fail = [&](SearchStatus s) {
    result.status = s;
    result.neighbors = neighbor_total();
    return result;
  };

  const std::size_t k0 = *first_agent_cal(latest, goals);
  std::vector<Pose> ideal = ideal_states_cal(latest[k0].pose(), k0, shape);

  // The first agent's current branch: its open-list top, or its finished
  // trajectory once it is done.
  std::size_t guide_owner = k0;
  int guide_leaf = 0;
  std::optional<Trajectory> guide_done;
  const int child_dt = searches[0].substeps();
  auto ideal_at = [&](std::size_t j, int t) {
    const Pose anchor = guide_done ? guide_done->pose_at(t) : searches[guide_owner].branch_pose(guide_leaf, t);
    return ideal_states_cal(anchor, guide_owner, shape)[j];
  };

  for (;;) {
    const std::optional<std::size_t> first = first_agent_cal(latest, goals, finished);
    if (!first) break;
    if ((result.batches & 31u) == 0 && deadline.expired()) return fail(SearchStatus::timeout);
    for (const AgentSearch& s : searches)
      if (s.neighbors() > scfg.node_budget) return fail(SearchStatus::node_budget);
    ++result.batches;

    const std::size_t i = *first;
    const std::optional<int> n = searches[i].pop();
    if (!n) return fail(SearchStatus::exhausted);
    latest[i] = searches[i].node(*n).state;
    bool waited = false;
    if (searches[i].try_finish(*n)) {
      on_finish(i);
      ideal = ideal_states_cal(latest[i].pose(), i, shape);
      if (ccfg.time_aligned_ideal) {
        guide_done = searches[i].trajectory();
        guide_owner = i;
      }
    } else {
      if (none_finished) {
        std::vector<Pose> lagged = ideal;
        if (ccfg.time_aligned_ideal)
          for (std::size_t j = 0; j < m; ++j) lagged[j] = ideal_at(j, latest[j].t);
        waited = remote_dis(latest, lagged, i, shape, ccfg) &&
                 (ccfg.max_consecutive_waits == 0 || waits_in_row < ccfg.max_consecutive_waits);
      }
      waits_in_row = waited ? waits_in_row + 1 : 0;
      if (waited)
        searches[i].expand_wait(*n, true);
      else
        searches[i].expand_standard(*n);
      const std::optional<int> top = searches[i].top();
      if (!top) return fail(SearchStatus::exhausted);
      ideal = ideal_states_cal(searches[i].node(*top).state.pose(), i, shape);
      if (ccfg.time_aligned_ideal) {
        guide_done.reset();
        guide_leaf = *top;
        guide_owner = i;
      }
    }
    if (trace) trace->push_back({result.batches, i, waited});

    for (std::size_t j = 0; j < m; ++j) {
      if (j == i || finished[j]) continue;
      const std::optional<int> nj = searches[j].pop();
      if (!nj) return fail(SearchStatus::exhausted);
      latest[j] = searches[j].node(*nj).state;
      if (searches[j].try_finish(*nj)) {
        on_finish(j);
        continue;
      }
      const Pose target = ccfg.time_aligned_ideal ? ideal_at(j, latest[j].t + child_dt) : ideal[j];
      if (ccfg.reward_requires_progress) {
        std::vector<ChildCandidate> children = searches[j].feasible_children(*nj);
        const std::size_t best = closest_child(children, target, ccfg.angle_weight_d);
        if (best < children.size() &&
            shape_distance(children[best].node.state.pose(), target, ccfg.angle_weight_d) <
                shape_distance(latest[j].pose(), target, ccfg.angle_weight_d))
          apply_reward(children[best], ccfg.closest_reward_r);
        searches[j].expand_with(std::move(children));
      } else {
        searches[j].expand_with(get_childnode_heuristic(searches[j], *nj, target, ccfg));
      }
      if (searches[j].open_empty()) return fail(SearchStatus::exhausted);
    }
  }

  result.status = SearchStatus::success;
  result.neighbors = neighbor_total();
  result.trajectories.reserve(m);
  for (const AgentSearch& s : searches) result.trajectories.push_back(s.trajectory());
  return result;
}

}  // namespace scmp
