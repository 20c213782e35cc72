#pragma once

// High-level conflict-tree search over groups and outliers, and stage chaining.

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "scmp/search_coop.hpp"

namespace scmp {

struct GroupSpec {
  RelativeStates shape;
  std::vector<AgentId> members;  // members[j] occupies shape.offsets[j]

  friend bool operator==(const GroupSpec&, const GroupSpec&) = default;
};

/// One planning phase: who travels together and where everyone ends up.
struct Stage {
  std::vector<GroupSpec> groups;
  std::vector<AgentId> outliers;
  std::vector<Pose> goals;  // indexed by agent id

  friend bool operator==(const Stage&, const Stage&) = default;
};

struct PlannerConfig {
  SearchConfig search;
  CshaConfig csha;
  bool interval_constraints = true;  // constrain every overlapping sample of a conflict, not just the first
  double traffic_penalty = 3.0;  // low-level cost per sample overlapping another agent's current path; 0 = off
  std::uint64_t seed = 0;
};

struct Limits {
  double time_limit_s = 90.0;
  std::size_t node_budget = 200000;  // per low-level query
  std::size_t max_ct_expansions = 0;  // 0 = unlimited
};

struct Scenario {
  World world;
  AgentSpec spec;
  std::vector<Pose> starts;  // first-stage starts, indexed by agent id
  std::vector<Stage> stages;
  PlannerConfig config;

  std::size_t agent_count() const { return starts.size(); }
};

class ScenarioError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void validate_stage(const Stage& stage, std::size_t agents, std::size_t index) {
  const std::string tag = "stage " + std::to_string(index) + ": ";
  if (stage.goals.size() != agents) throw ScenarioError(tag + "goal count does not match agent count");
  std::vector<int> seen(agents, 0);
  auto claim = [&](AgentId a) {
    if (a >= agents) throw ScenarioError(tag + "agent " + std::to_string(a) + " does not exist");
    if (seen[a]++) throw ScenarioError(tag + "agent " + std::to_string(a) + " assigned twice");
  };
  for (std::size_t g = 0; g < stage.groups.size(); ++g) {
    const GroupSpec& grp = stage.groups[g];
    try {
      grp.shape.validate();
    } catch (const std::invalid_argument& e) {
      throw ScenarioError(tag + "group " + std::to_string(g) + ": " + e.what());
    }
    if (grp.members.size() != grp.shape.size())
      throw ScenarioError(tag + "group " + std::to_string(g) + " member count differs from its offsets");
    for (AgentId a : grp.members) claim(a);
  }
  for (AgentId a : stage.outliers) claim(a);
  for (std::size_t a = 0; a < agents; ++a)
    if (!seen[a]) throw ScenarioError(tag + "agent " + std::to_string(a) + " is neither grouped nor an outlier");
}

/// Poses must lie in free space and must not overlap each other.
inline void validate_poses(std::span<const Pose> poses, const AgentSpec& spec, const World& world,
                           const std::string& what) {
  for (std::size_t a = 0; a < poses.size(); ++a) {
    if (collides_static(footprint(poses[a], spec), world))
      throw ScenarioError(what + " of agent " + std::to_string(a) + " is not in free space");
    for (std::size_t b = a + 1; b < poses.size(); ++b)
      if (bodies_overlap(poses[a], spec, poses[b], spec))
        throw ScenarioError(what + "s of agents " + std::to_string(a) + " and " + std::to_string(b) + " overlap");
  }
}

inline void validate_scenario(const Scenario& s) {
  try {
    s.world.validate();
    s.spec.validate();
    s.config.csha.validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(e.what());
  }
  if (s.starts.empty()) throw ScenarioError("scenario has no agents");
  if (s.stages.empty()) throw ScenarioError("scenario has no stages");
  validate_poses(s.starts, s.spec, s.world, "start");
  for (std::size_t i = 0; i < s.stages.size(); ++i) {
    validate_stage(s.stages[i], s.agent_count(), i);
    validate_poses(s.stages[i].goals, s.spec, s.world, "stage " + std::to_string(i) + " goal");
  }
}

struct BodyConflict {
  AgentId agent_i = 0;
  AgentId agent_j = 0;
  int t = 0;         // sample index of the interval start
  int fraction = 0;  // instant t + fraction / kConflictSubsteps
  Pose pose_i;
  Pose pose_j;
};

inline constexpr int kConflictSubsteps = 5;

/// Pose at t + k / kConflictSubsteps, goal-padded.
inline Pose pose_at(const Trajectory& tr, int t, int k) {
  if (t >= tr.arrival_step()) return tr.states.back().pose();
  if (k == 0) return tr.at(t).pose();
  return interpolate(tr.at(t).pose(), tr.at(t + 1).pose(), static_cast<double>(k) / kConflictSubsteps);
}

inline int horizon(std::span<const Trajectory> solution) {
  int h = 0;
  for (const Trajectory& tr : solution) h = std::max(h, tr.arrival_step());
  return h;
}

/// Earliest body overlap over all instants t + k/5; ties go to the smaller (i, j).
/// `pairs`, if given, restricts the scan to flagged pairs (row-major n*n).
inline std::optional<BodyConflict> find_first_body_conflict(std::span<const Trajectory> solution,
                                                            const AgentSpec& spec,
                                                            const std::vector<char>* pairs = nullptr) {
  const int h = horizon(solution);
  const std::size_t n = solution.size();
  if (pairs) {
    bool any = false;
    for (char f : *pairs) any = any || f;
    if (!any) return std::nullopt;
  }
  std::vector<OrientedRectangle> fps(n);
  for (int t = 0; t <= h; ++t) {
    for (int k = 0; k < (t < h ? kConflictSubsteps : 1); ++k) {
      for (std::size_t a = 0; a < n; ++a) fps[a] = footprint(pose_at(solution[a], t, k), spec);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
          if ((!pairs || (*pairs)[i * n + j]) && rectangles_overlap(fps[i], fps[j]))
            return BodyConflict{i, j, t, k, pose_at(solution[i], t, k), pose_at(solution[j], t, k)};
    }
  }
  return std::nullopt;
}

/// Upper-triangular n*n flags of agent pairs that overlap at some instant.
/// With `previous`, only pairs touching an agent flagged in `changed` are
/// rechecked; the rest are copied.
inline std::vector<char> conflicting_pairs(std::span<const Trajectory> solution, const AgentSpec& spec,
                                           const std::vector<char>* previous = nullptr,
                                           const std::vector<char>* changed = nullptr) {
  const std::size_t n = solution.size();
  std::vector<char> hit(n * n, 0);
  std::vector<char> check(n * n, 1);
  if (previous && changed) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (!(*changed)[i] && !(*changed)[j]) {
          hit[i * n + j] = (*previous)[i * n + j];
          check[i * n + j] = 0;
        }
  }
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < n; ++i)
    if (!changed || !previous || (*changed)[i]) active.push_back(i);
  const int h = horizon(solution);
  std::vector<OrientedRectangle> fps(n);
  for (int t = 0; t <= h; ++t) {
    for (int k = 0; k < (t < h ? kConflictSubsteps : 1); ++k) {
      for (std::size_t a = 0; a < n; ++a) fps[a] = footprint(pose_at(solution[a], t, k), spec);
      for (std::size_t i : active)
        for (std::size_t j = 0; j < n; ++j) {
          if (i == j) continue;
          const std::size_t cell = std::min(i, j) * n + std::max(i, j);
          if (check[cell] && !hit[cell] && rectangles_overlap(fps[i], fps[j])) hit[cell] = 1;
        }
    }
  }
  return hit;
}

inline std::size_t count_flags(const std::vector<char>& flags) {
  std::size_t c = 0;
  for (char f : flags) c += f != 0;
  return c;
}

inline double cost_sum(std::span<const Trajectory> solution, double sample_time) {
  double c = 0.0;
  for (const Trajectory& tr : solution) c += tr.arrival_step() * sample_time;
  return c;
}

struct CtNode {
  std::vector<ConstraintSet> constraints;  // indexed by agent id
  std::vector<std::shared_ptr<const Trajectory>> solution;
  double cost = 0.0;
  std::vector<char> pair_flags;  // see conflicting_pairs
  std::size_t conflicting_pairs = 0;
};

enum class PlanStatus { success, root_failure, exhausted, timeout, budget };

inline const char* to_string(PlanStatus s) {
  switch (s) {
    case PlanStatus::success: return "success";
    case PlanStatus::root_failure: return "root_failure";
    case PlanStatus::exhausted: return "exhausted";
    case PlanStatus::timeout: return "timeout";
    case PlanStatus::budget: return "budget";
  }
  return "?";
}

struct PlanStats {
  std::size_t high_level_nodes = 0;  // +2 per processed conflict
  std::size_t low_level_nodes = 0;   // neighbours generated across every low-level query
  std::size_t conflicts = 0;
  double runtime_s = 0.0;
};

struct PlanResult {
  PlanStatus status = PlanStatus::exhausted;
  std::vector<Trajectory> trajectories;  // indexed by agent id
  PlanStats stats;

  bool ok() const { return status == PlanStatus::success; }
};

enum class PlanMode { complete, root_only };

/// Everything a replan needs for one stage.
class StagePlanner {
 public:
  StagePlanner(const World& world, const AgentSpec& spec, const Stage& stage, std::span<const Pose> starts,
               const PlannerConfig& cfg, const Limits& limits, Heuristic& heuristic, const Deadline& deadline)
      : world_(&world),
        spec_(&spec),
        stage_(&stage),
        starts_(starts.begin(), starts.end()),
        cfg_(cfg),
        heuristic_(&heuristic),
        deadline_(deadline) {
    cfg_.search.node_budget = limits.node_budget;
    group_of_.assign(starts_.size(), -1);
    for (std::size_t g = 0; g < stage.groups.size(); ++g)
      for (AgentId a : stage.groups[g].members) group_of_[a] = static_cast<int>(g);
  }

  int group_of(AgentId a) const { return group_of_[a]; }

  /// Replans agent `a` (or its whole group) inside `node`. Returns the low-level
  /// status; on success the node's solution is updated.
  SearchStatus replan(CtNode& node, AgentId a, std::size_t& neighbours) const {
    const int g = group_of_[a];
    auto traffic_without = [&](auto replanned) {
      std::vector<const Trajectory*> others;
      for (std::size_t o = 0; o < node.solution.size(); ++o)
        if (node.solution[o] && !replanned(static_cast<AgentId>(o))) others.push_back(node.solution[o].get());
      return TrafficIndex(others, *spec_, cfg_.traffic_penalty);
    };
    if (g < 0) {
      const TrafficIndex traffic = traffic_without([&](AgentId o) { return o == a; });
      const SingleResult r = plan_single(a, at_time(starts_[a], 0), stage_->goals[a], *spec_, *world_,
                                         node.constraints[a], cfg_.search, *heuristic_, deadline_, &traffic);
      neighbours += r.neighbors;
      if (r.ok()) node.solution[a] = std::make_shared<const Trajectory>(r.trajectory);
      return r.status;
    }
    const GroupSpec& grp = stage_->groups[static_cast<std::size_t>(g)];
    ConstraintSet merged;
    for (AgentId m : grp.members) merged.insert(merged.end(), node.constraints[m].begin(), node.constraints[m].end());
    std::vector<AgentState> starts;
    std::vector<Pose> goals;
    for (AgentId m : grp.members) {
      starts.push_back(at_time(starts_[m], 0));
      goals.push_back(stage_->goals[m]);
    }
    const std::vector<ConstraintSet> per_member(grp.members.size(), merged);
    const TrafficIndex traffic = traffic_without([&](AgentId o) { return group_of_[o] == g; });
    const GroupResult r = plan_group(grp.members, starts, goals, *spec_, *world_, per_member, grp.shape, cfg_.csha,
                                     cfg_.search, *heuristic_, deadline_, &traffic);
    neighbours += r.neighbors;
    if (r.ok())
      for (std::size_t j = 0; j < grp.members.size(); ++j)
        node.solution[grp.members[j]] = std::make_shared<const Trajectory>(r.trajectories[j]);
    return r.status;
  }

  /// Unconstrained plans: outliers first, then groups.
  std::optional<CtNode> root(std::size_t& neighbours, SearchStatus& status) const {
    CtNode node;
    node.constraints.resize(starts_.size());
    node.solution.resize(starts_.size());
    status = SearchStatus::success;
    for (AgentId a : stage_->outliers)
      if ((status = replan(node, a, neighbours)) != SearchStatus::success) return std::nullopt;
    for (const GroupSpec& grp : stage_->groups)
      if ((status = replan(node, grp.members.front(), neighbours)) != SearchStatus::success) return std::nullopt;
    const std::vector<Trajectory> sol = materialize(node);
    node.cost = cost_sum(sol, spec_->sample_time);
    node.pair_flags = conflicting_pairs(sol, *spec_);
    node.conflicting_pairs = count_flags(node.pair_flags);
    return node;
  }

  static std::vector<Trajectory> materialize(const CtNode& node) {
    std::vector<Trajectory> out;
    out.reserve(node.solution.size());
    for (const auto& p : node.solution) out.push_back(*p);
    return out;
  }

  const Deadline& deadline() const { return deadline_; }
  const AgentSpec& spec() const { return *spec_; }
  const PlannerConfig& config() const { return cfg_; }

 private:
  const World* world_;
  const AgentSpec* spec_;
  const Stage* stage_;
  std::vector<Pose> starts_;
  PlannerConfig cfg_;
  Heuristic* heuristic_;
  Deadline deadline_;
  std::vector<int> group_of_;
};

/// The two children of a conflict: each conflicting agent gets a constraint
/// against the other's pose and is replanned (with its group, if any).
/// Children whose replan fails are dropped.
inline std::vector<CtNode> branch(const CtNode& parent, const BodyConflict& c, const StagePlanner& planner,
                                  std::size_t& neighbours, bool* timed_out = nullptr) {
  std::vector<CtNode> out;
  // Poses of i and j at the conflict instant and, optionally, at every later
  // sample up to the end of the overlap.
  std::vector<AgentState> poses_i{at_time(c.pose_i, c.t)};
  std::vector<AgentState> poses_j{at_time(c.pose_j, c.t)};
  if (planner.config().interval_constraints) {
    const Trajectory& ti = *parent.solution[c.agent_i];
    const Trajectory& tj = *parent.solution[c.agent_j];
    const int h = std::max(ti.arrival_step(), tj.arrival_step());
    for (int t = c.t + 1; t <= h; ++t) {
      const Pose pi = pose_at(ti, t, 0);
      const Pose pj = pose_at(tj, t, 0);
      if (!bodies_overlap(pi, planner.spec(), pj, planner.spec())) break;
      poses_i.push_back(at_time(pi, t));
      poses_j.push_back(at_time(pj, t));
    }
  }
  for (std::size_t s = 0; s < 2; ++s) {
    const AgentId self = s == 0 ? c.agent_i : c.agent_j;
    const AgentId other = s == 0 ? c.agent_j : c.agent_i;
    CtNode child = parent;
    for (const AgentState& p : s == 0 ? poses_j : poses_i) child.constraints[self].push_back({other, p});
    const SearchStatus st = planner.replan(child, self, neighbours);
    if (st == SearchStatus::timeout && timed_out) *timed_out = true;
    if (st != SearchStatus::success) continue;
    double cost = 0.0;
    for (const auto& p : child.solution) cost += p->arrival_step() * planner.spec().sample_time;
    child.cost = cost;
    std::vector<char> changed(child.solution.size(), 0);
    for (std::size_t a = 0; a < changed.size(); ++a) changed[a] = child.solution[a] != parent.solution[a];
    child.pair_flags = conflicting_pairs(StagePlanner::materialize(child), planner.spec(), &parent.pair_flags, &changed);
    child.conflicting_pairs = count_flags(child.pair_flags);
    out.push_back(std::move(child));
  }
  return out;
}

inline PlanResult plan_stage(const World& world, const AgentSpec& spec, const Stage& stage,
                             std::span<const Pose> starts, const PlannerConfig& cfg, const Limits& limits,
                             Heuristic& heuristic, const Deadline& deadline, PlanMode mode = PlanMode::complete) {
  const auto t0 = std::chrono::steady_clock::now();
  PlanResult result;
  auto finish = [&](PlanStatus s) {
    result.status = s;
    result.stats.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
  };

  const StagePlanner planner(world, spec, stage, starts, cfg, limits, heuristic, deadline);
  SearchStatus root_status = SearchStatus::success;
  std::optional<CtNode> root = planner.root(result.stats.low_level_nodes, root_status);
  if (!root) return finish(root_status == SearchStatus::timeout ? PlanStatus::timeout : PlanStatus::root_failure);

  // Cost first; among equal costs, fewer conflicting pairs, then insertion order.
  struct Entry {
    double cost;
    std::size_t pairs;
    std::uint64_t seq;
    std::shared_ptr<CtNode> node;
    bool operator<(const Entry& o) const {
      if (cost != o.cost) return cost > o.cost;
      if (pairs != o.pairs) return pairs > o.pairs;
      return seq > o.seq;
    }
  };
  std::priority_queue<Entry> open;
  std::uint64_t seq = 0;
  open.push({root->cost, root->conflicting_pairs, seq++, std::make_shared<CtNode>(std::move(*root))});

  std::size_t expansions = 0;
  while (!open.empty()) {
    if (deadline.expired()) return finish(PlanStatus::timeout);
    const std::shared_ptr<CtNode> node = open.top().node;
    open.pop();
    std::vector<Trajectory> solution = StagePlanner::materialize(*node);
    const std::optional<BodyConflict> conflict = find_first_body_conflict(solution, spec, &node->pair_flags);
    if (!conflict) {
      result.trajectories = std::move(solution);
      return finish(PlanStatus::success);
    }
    if (mode == PlanMode::root_only) return finish(PlanStatus::exhausted);
    if (limits.max_ct_expansions != 0 && expansions >= limits.max_ct_expansions) return finish(PlanStatus::budget);
    ++expansions;
    ++result.stats.conflicts;
    result.stats.high_level_nodes += 2;
    bool timed_out = false;
    for (CtNode& child : branch(*node, *conflict, planner, result.stats.low_level_nodes, &timed_out))
      open.push({child.cost, child.conflicting_pairs, seq++, std::make_shared<CtNode>(std::move(child))});
    if (timed_out) return finish(PlanStatus::timeout);
  }
  return finish(PlanStatus::exhausted);
}

inline PlanResult plan(const Scenario& s, const Limits& limits = {}, PlanMode mode = PlanMode::complete) {
  Heuristic h(s.world, s.spec, s.config.search.holonomic_cell);
  return plan_stage(s.world, s.spec, s.stages.front(), s.starts, s.config, limits, h,
                    Deadline::in(limits.time_limit_s), mode);
}

struct StagesResult {
  PlanStatus status = PlanStatus::exhausted;
  std::optional<std::size_t> failed_stage;
  std::vector<PlanResult> stages;

  bool ok() const { return status == PlanStatus::success; }
  PlanStats totals() const {
    PlanStats t;
    for (const PlanResult& r : stages) {
      t.high_level_nodes += r.stats.high_level_nodes;
      t.low_level_nodes += r.stats.low_level_nodes;
      t.conflicts += r.stats.conflicts;
      t.runtime_s += r.stats.runtime_s;
    }
    return t;
  }
};

/// Runs the stages in order; each stage starts where the previous one ended.
inline StagesResult plan_stages(const Scenario& s, const Limits& limits = {}, PlanMode mode = PlanMode::complete) {
  Heuristic h(s.world, s.spec, s.config.search.holonomic_cell);
  const Deadline deadline = Deadline::in(limits.time_limit_s);
  StagesResult out;
  std::vector<Pose> starts = s.starts;
  for (std::size_t i = 0; i < s.stages.size(); ++i) {
    out.stages.push_back(plan_stage(s.world, s.spec, s.stages[i], starts, s.config, limits, h, deadline, mode));
    if (!out.stages.back().ok()) {
      out.status = out.stages.back().status;
      out.failed_stage = i;
      return out;
    }
    for (std::size_t a = 0; a < starts.size(); ++a) starts[a] = out.stages.back().trajectories[a].states.back().pose();
  }
  out.status = PlanStatus::success;
  return out;
}

}  // namespace scmp
