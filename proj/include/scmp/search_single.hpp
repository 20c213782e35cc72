#pragma once

// Spatiotemporal hybrid A* for one agent under avoid-constraints, plus the
// per-agent search state shared with the cooperative planner.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "scmp/model.hpp"
#include "scmp/reeds_shepp.hpp"
#include "scmp/world.hpp"

namespace scmp {

using AgentId = std::size_t;

/// Forbids the owning agent from overlapping `other_agent` at `state` within
/// a time window around state.t.
struct AvoidConstraint {
  AgentId other_agent = 0;
  AgentState state;

  friend bool operator==(const AvoidConstraint&, const AvoidConstraint&) = default;
};

using ConstraintSet = std::vector<AvoidConstraint>;

struct SearchConfig {
  double step_duration = 1.0;  // seconds of motion per search primitive
  double reverse_penalty = 2.0;
  double steering_change_penalty = 1.5;
  double wait_cost_factor = 1.0;  // wait cost as a fraction of a forward primitive's arc
  int constraint_window = 1;  // +- search steps around a constraint's time
  double goal_position_tolerance = 0.5;
  double goal_yaw_tolerance = 10.0 * kPi / 180.0;
  double xy_resolution = 0.7;
  double yaw_resolution = kTwoPi / 36.0;
  std::size_t node_budget = 200000;
  int analytic_interval_max = 10;
  double analytic_radius_factor = 1.05;
  double analytic_max_length = 0.0;  // metres; longer connections are not tried (0 = no limit)
  double holonomic_cell = 1.0;
};

/// Wall-clock cutoff shared by every search of one planning run.
struct Deadline {
  std::chrono::steady_clock::time_point at = std::chrono::steady_clock::time_point::max();

  static Deadline in(double seconds) {
    if (!std::isfinite(seconds)) return {};
    return {std::chrono::steady_clock::now() +
            std::chrono::duration_cast<std::chrono::steady_clock::duration>(std::chrono::duration<double>(seconds))};
  }
  bool expired() const { return std::chrono::steady_clock::now() >= at; }
};

enum class SearchStatus { success, exhausted, node_budget, timeout };

inline const char* to_string(SearchStatus s) {
  switch (s) {
    case SearchStatus::success: return "success";
    case SearchStatus::exhausted: return "exhausted";
    case SearchStatus::node_budget: return "node_budget";
    case SearchStatus::timeout: return "timeout";
  }
  return "?";
}

/// Time-indexed samples of one agent; controls[k] drives states[k] to states[k+1].
struct Trajectory {
  std::vector<AgentState> states;
  std::vector<ControlInput> controls;

  int arrival_step() const { return static_cast<int>(states.size()) - 1; }
  /// Goal-padded lookup by sample index.
  const AgentState& at(int t) const {
    if (t <= 0) return states.front();
    if (t >= static_cast<int>(states.size())) return states.back();
    return states[static_cast<std::size_t>(t)];
  }
  Pose pose_at(int t) const { return at(t).pose(); }
  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct DiscreteKey {
  int xi = 0;
  int yi = 0;
  int yawi = 0;
  int t = 0;

  friend bool operator==(const DiscreteKey&, const DiscreteKey&) = default;
};

struct DiscreteKeyHash {
  std::size_t operator()(const DiscreteKey& k) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (int v : {k.xi, k.yi, k.yawi, k.t}) {
      h ^= static_cast<std::uint32_t>(v);
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

inline DiscreteKey discretize(const AgentState& s, const SearchConfig& cfg) {
  const int bins = std::max(1, static_cast<int>(std::lround(kTwoPi / cfg.yaw_resolution)));
  int yawi = static_cast<int>(std::floor((normalize_angle(s.yaw) + kPi) / cfg.yaw_resolution));
  yawi = ((yawi % bins) + bins) % bins;
  return {static_cast<int>(std::floor(s.x / cfg.xy_resolution)), static_cast<int>(std::floor(s.y / cfg.xy_resolution)),
          yawi, s.t};
}

/// Obstacle-aware distance-to-goal field on a grid (8-connected Dijkstra).
class HolonomicMap {
 public:
  HolonomicMap(const World& world, Vec2 goal, double cell) : world_(&world), cell_(cell) {
    nx_ = std::max(1, static_cast<int>(std::ceil((world.x_max() - world.x_min()) / cell)));
    ny_ = std::max(1, static_cast<int>(std::ceil((world.y_max() - world.y_min()) / cell)));
    dist_.assign(static_cast<std::size_t>(nx_) * ny_, std::numeric_limits<double>::infinity());
    std::vector<char> blocked(dist_.size(), 0);
    for (int iy = 0; iy < ny_; ++iy)
      for (int ix = 0; ix < nx_; ++ix) blocked[index(ix, iy)] = point_blocked(center(ix, iy)) ? 1 : 0;

    const auto [gx, gy] = cell_of(goal);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
    dist_[index(gx, gy)] = 0.0;
    open.push({0.0, static_cast<int>(index(gx, gy))});
    constexpr int dx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
    constexpr int dy[8] = {0, 0, 1, -1, 1, -1, 1, -1};
    while (!open.empty()) {
      const auto [d, id] = open.top();
      open.pop();
      if (d > dist_[static_cast<std::size_t>(id)]) continue;
      const int ix = id % nx_;
      const int iy = id / nx_;
      for (int k = 0; k < 8; ++k) {
        const int jx = ix + dx[k];
        const int jy = iy + dy[k];
        if (jx < 0 || jy < 0 || jx >= nx_ || jy >= ny_) continue;
        const std::size_t j = index(jx, jy);
        if (blocked[j]) continue;
        const double nd = d + cell_ * (k < 4 ? 1.0 : std::numbers::sqrt2);
        if (nd < dist_[j]) {
          dist_[j] = nd;
          open.push({nd, static_cast<int>(j)});
        }
      }
    }
  }

  /// Lower-bound style estimate: octile distances are scaled to never exceed
  /// the Euclidean metric and one cell diagonal of slack is removed.
  double estimate(Vec2 p) const {
    const auto [ix, iy] = cell_of(p);
    const double d = dist_[index(ix, iy)];
    if (!std::isfinite(d)) return 0.0;
    constexpr double kOctileOverEuclid = 1.0823922002923938;  // sqrt(4 - 2 sqrt(2))
    return std::max(0.0, d / kOctileOverEuclid - cell_ * std::numbers::sqrt2);
  }

 private:
  std::size_t index(int ix, int iy) const { return static_cast<std::size_t>(iy) * nx_ + ix; }
  Vec2 center(int ix, int iy) const {
    return {world_->x_min() + (ix + 0.5) * cell_, world_->y_min() + (iy + 0.5) * cell_};
  }
  std::pair<int, int> cell_of(Vec2 p) const {
    const int ix = std::clamp(static_cast<int>(std::floor((p.x - world_->x_min()) / cell_)), 0, nx_ - 1);
    const int iy = std::clamp(static_cast<int>(std::floor((p.y - world_->y_min()) / cell_)), 0, ny_ - 1);
    return {ix, iy};
  }
  bool point_blocked(Vec2 p) const {
    for (const Obstacle& o : world_->obstacles) {
      if (const auto* c = std::get_if<Circle>(&o.shape)) {
        if (norm(p - c->center) <= c->radius) return true;
      } else {
        const auto& q = std::get<Polygon4>(o.shape).corners;
        bool inside = true;
        for (std::size_t i = 0; i < 4 && inside; ++i) inside = cross(q[(i + 1) % 4] - q[i], p - q[i]) >= 0.0;
        if (inside) return true;
      }
    }
    return false;
  }

  const World* world_;
  double cell_;
  int nx_ = 0;
  int ny_ = 0;
  std::vector<double> dist_;
};

/// max(Reeds-Shepp length ignoring obstacles, holonomic distance with obstacles).
/// Holonomic fields are cached per goal cell.
class Heuristic {
 public:
  Heuristic(const World& world, const AgentSpec& spec, double cell = 1.0)
      : world_(&world), radius_(spec.min_turning_radius()), cell_(cell) {}

  double operator()(const AgentState& s, const Pose& goal) {
    const double nonholonomic = rs::distance(s.pose(), goal, radius_);
    return std::max(nonholonomic, field(goal).estimate(s.position()));
  }

  const HolonomicMap& field(const Pose& goal) {
    const std::pair<long, long> key{std::lround(std::floor(goal.x / cell_ * 4.0)),
                                    std::lround(std::floor(goal.y / cell_ * 4.0))};
    auto it = fields_.find(key);
    if (it == fields_.end())
      it = fields_.emplace(key, std::make_unique<HolonomicMap>(*world_, Vec2{goal.x, goal.y}, cell_)).first;
    return *it->second;
  }

 private:
  const World* world_;
  double radius_;
  double cell_;
  std::map<std::pair<long, long>, std::unique_ptr<HolonomicMap>> fields_;
};

inline double heuristic(const AgentState& state, const Pose& goal, const AgentSpec& spec, const World& world) {
  Heuristic h(world, spec);
  return h(state, goal);
}

/// Footprints an agent must avoid: constraint poses (time-windowed) and
/// finished teammates parked at their final pose.
class AvoidanceIndex {
 public:
  AvoidanceIndex(std::span<const AvoidConstraint> constraints, AgentId self, const AgentSpec& spec, int window)
      : window_(window) {
    for (const AvoidConstraint& c : constraints) {
      if (c.other_agent == self) continue;
      timed_.push_back({c.state.t, footprint(c.state, spec)});
    }
    std::stable_sort(timed_.begin(), timed_.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  }

  void add_parked(const Pose& p, int from_time, const AgentSpec& spec) {
    parked_.push_back({from_time, footprint(p, spec)});
  }

  bool empty() const { return timed_.empty() && parked_.empty(); }

  /// A pose on the motion interval starting at sample `tau`.
  bool blocked_during(const OrientedRectangle& fp, int tau) const {
    auto it = std::lower_bound(timed_.begin(), timed_.end(), tau - window_,
                               [](const auto& e, int t) { return e.first < t; });
    for (; it != timed_.end() && it->first <= tau + window_; ++it)
      if (rectangles_overlap(fp, it->second)) return true;
    for (const auto& [from, rect] : parked_)
      if (from <= tau + 1 && rectangles_overlap(fp, rect)) return true;
    return false;
  }

  /// A pose held from sample `from` onwards forever.
  bool blocked_holding(const OrientedRectangle& fp, int from) const {
    auto it = std::lower_bound(timed_.begin(), timed_.end(), from - window_,
                               [](const auto& e, int t) { return e.first < t; });
    for (; it != timed_.end(); ++it)
      if (rectangles_overlap(fp, it->second)) return true;
    for (const auto& entry : parked_)
      if (rectangles_overlap(fp, entry.second)) return true;
    return false;
  }

 private:
  int window_;
  std::vector<std::pair<int, OrientedRectangle>> timed_;
  std::vector<std::pair<int, OrientedRectangle>> parked_;
};

/// Other agents' current trajectories. Overlaps with them are priced, not
/// forbidden: each overlapping sample adds `penalty` to a node's g.
class TrafficIndex {
 public:
  TrafficIndex() = default;
  TrafficIndex(std::span<const Trajectory* const> others, const AgentSpec& spec, double penalty) : penalty_(penalty) {
    for (const Trajectory* tr : others) {
      std::vector<OrientedRectangle> fps;
      fps.reserve(tr->states.size());
      for (const AgentState& s : tr->states) fps.push_back(footprint(s.pose(), spec));
      fps_.push_back(std::move(fps));
    }
  }

  bool empty() const { return fps_.empty() || penalty_ <= 0.0; }

  double cost(const OrientedRectangle& fp, int t) const {
    int n = 0;
    for (const auto& fps : fps_) {
      const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(std::max(t, 0)), fps.size() - 1);
      n += rectangles_overlap(fp, fps[k]);
    }
    return penalty_ * n;
  }

 private:
  double penalty_ = 0.0;
  std::vector<std::vector<OrientedRectangle>> fps_;
};

/// Checks the motion between two consecutive samples against the world and
/// the avoidance index.
inline bool motion_feasible(const AgentState& a, const AgentState& b, const AgentSpec& spec, const World& world,
                            const AvoidanceIndex& avoid) {
  const int n = sweep_divisions(a.pose(), b.pose(), spec);
  const bool check_avoid = !avoid.empty();
  for (int k = 0; k <= n; ++k) {
    const OrientedRectangle fp = footprint(interpolate(a.pose(), b.pose(), static_cast<double>(k) / n), spec);
    if (collides_static(fp, world)) return false;
    if (check_avoid && avoid.blocked_during(fp, a.t)) return false;
  }
  return true;
}

struct Tail {
  std::vector<AgentState> states;      // excludes the starting state
  std::vector<ControlInput> controls;  // controls[k] leads into states[k]
};

/// Samples a Reeds-Shepp connection as a sequence of exact discrete-model
/// steps ending exactly on `goal`. Sample positions lie on the curve; headings
/// are chord directions so each step is reproduced by `step`. The curve start
/// heading is shifted until the first chord leaves along the current yaw.
inline std::optional<Tail> reeds_shepp_tail(const AgentState& start, const Pose& goal, const AgentSpec& spec,
                                            double radius_factor) {
  Tail tail;
  if (norm(start.position() - Vec2{goal.x, goal.y}) < 1e-9 && angle_distance(start.yaw, goal.yaw) < 1e-9)
    return tail;

  const double radius = spec.min_turning_radius() * radius_factor;
  const double step_max = std::min(spec.v_forward_max, -spec.v_backward_max) * spec.sample_time;

  std::vector<Vec2> points;
  std::vector<int> dirs;
  int word = -1;  // fixed after the first sample so the residual stays continuous
  // Samples the curve leaving from (start, virtual_yaw); returns how far the
  // first chord's heading is from the real start yaw.
  auto sample = [&](double virtual_yaw) -> std::optional<double> {
    const Pose from{start.x, start.y, virtual_yaw};
    const rs::Path path = rs::shortest_path(from, goal, radius, word);
    if (!path.valid() || path.slot < 0) return std::nullopt;
    word = path.slot;
    points.assign(1, start.position());
    dirs.clear();
    // Runs of same-direction segments, each sampled at uniform arc length; a
    // run's spacing never exceeds the previous run's.
    struct Piece {
      rs::Seg type;
      double len;
    };
    std::vector<std::vector<Piece>> runs;
    for (std::size_t i = 0; i < 5 && path.types[i] != rs::Seg::nop; ++i) {
      if (std::abs(path.lengths[i]) * radius < 1e-9) continue;
      if (runs.empty() || (runs.back().front().len > 0.0) != (path.lengths[i] > 0.0)) runs.emplace_back();
      runs.back().push_back({path.types[i], path.lengths[i]});
    }
    Pose run_start = from;
    double spacing = step_max;
    for (const std::vector<Piece>& run : runs) {
      double total = 0.0;
      for (const Piece& pc : run) total += std::abs(pc.len);
      if (&run != &runs.front()) spacing = std::min(step_max, spacing * (2.0 * radius_factor - 1.02));
      const int n = std::max(1, static_cast<int>(std::ceil(total * radius / spacing - 1e-9)));
      spacing = total * radius / n;
      if (spacing < 0.02) return std::nullopt;  // too fine for the discrete model
      const int dir = run.front().len > 0.0 ? 1 : -1;
      for (int j = 1; j <= n; ++j) {
        double remaining = total * j / n;
        Pose p = run_start;
        for (const Piece& pc : run) {
          const double take = std::min(remaining, std::abs(pc.len));
          p = rs::advance(p, pc.type, dir * take, radius);
          remaining -= take;
          if (remaining <= 0.0) break;
        }
        points.push_back({p.x, p.y});
        dirs.push_back(dir);
      }
      for (const Piece& pc : run) run_start = rs::advance(run_start, pc.type, pc.len, radius);
    }
    if (dirs.empty()) return std::nullopt;
    points.back() = {goal.x, goal.y};
    const Vec2 c0 = points[1] - points[0];
    return normalize_angle(std::atan2(c0.y, c0.x) + (dirs[0] < 0 ? kPi : 0.0) - start.yaw);
  };

  // Secant iteration on the virtual start yaw.
  double x0 = start.yaw;
  std::optional<double> f0 = sample(x0);
  if (!f0) return std::nullopt;
  double x1 = normalize_angle(x0 - *f0);
  std::optional<double> f1 = std::abs(*f0) < 1e-12 ? f0 : sample(x1);
  if (std::abs(*f0) < 1e-12) x1 = x0;
  for (int iter = 0; f1 && std::abs(*f1) >= 1e-12 && iter < 40; ++iter) {
    const double denom = *f1 - *f0;
    double x2 = std::abs(denom) > 1e-15 ? x1 - *f1 * normalize_angle(x1 - x0) / denom : x1 - *f1;
    if (!std::isfinite(x2) || std::abs(normalize_angle(x2 - x1)) > 0.5) x2 = x1 - *f1;
    x0 = x1;
    f0 = f1;
    x1 = normalize_angle(x2);
    f1 = sample(x1);
  }
  if (!f1 || std::abs(*f1) > 1e-9) return std::nullopt;

  const std::size_t m = dirs.size();
  std::vector<double> yaw(m + 1);
  yaw[0] = start.yaw;
  for (std::size_t k = 1; k < m; ++k) {
    const Vec2 c = points[k + 1] - points[k];
    yaw[k] = normalize_angle(std::atan2(c.y, c.x) + (dirs[k] < 0 ? kPi : 0.0));
  }
  yaw[m] = normalize_angle(goal.yaw);

  tail.states.reserve(m);
  tail.controls.reserve(m);
  const double ts = spec.sample_time;
  for (std::size_t k = 0; k < m; ++k) {
    const Vec2 c = points[k + 1] - points[k];
    const ControlInput u{dirs[k] * norm(c) / ts, normalize_angle(yaw[k + 1] - yaw[k]) / ts};
    if (!control_in_bounds(u, spec)) return std::nullopt;
    tail.controls.push_back(u);
    tail.states.push_back({points[k + 1].x, points[k + 1].y, yaw[k + 1], start.t + static_cast<int>(k) + 1});
  }
  return tail;
}

/// Reeds-Shepp connection to the goal, accepted only if every sample interval
/// is collision- and constraint-free and the goal can be held afterwards.
inline std::optional<Tail> analytic_expand(const AgentState& state, const Pose& goal, const AgentSpec& spec,
                                           const World& world, const AvoidanceIndex& avoid,
                                           const SearchConfig& cfg) {
  if (cfg.analytic_max_length > 0.0 &&
      rs::distance(state.pose(), goal, spec.min_turning_radius() * cfg.analytic_radius_factor) > cfg.analytic_max_length)
    return std::nullopt;
  std::optional<Tail> tail = reeds_shepp_tail(state, goal, spec, cfg.analytic_radius_factor);
  if (!tail) return std::nullopt;
  AgentState prev = state;
  for (const AgentState& s : tail->states) {
    if (!motion_feasible(prev, s, spec, world, avoid)) return std::nullopt;
    prev = s;
  }
  if (avoid.blocked_holding(footprint(prev, spec), prev.t)) return std::nullopt;
  return tail;
}

inline std::optional<Tail> analytic_expand(const AgentState& state, const Pose& goal, const AgentSpec& spec,
                                           const World& world, std::span<const AvoidConstraint> constraints,
                                           const SearchConfig& cfg = {}) {
  const AvoidanceIndex avoid(constraints, static_cast<AgentId>(-1), spec,
                            cfg.constraint_window * primitive_substeps(cfg.step_duration, spec));
  return analytic_expand(state, goal, spec, world, avoid, cfg);
}

struct SearchNode {
  AgentState state;
  double g = 0.0;
  double h = 0.0;
  double f = 0.0;
  int parent = -1;
  MotionPrimitive primitive;
};

struct ChildCandidate {
  SearchNode node;
  std::size_t primitive_index = 0;
};

/// Incremental best-first search for one agent. The cooperative planner drives
/// several of these in lock-step; the single-agent planner just loops.
class AgentSearch {
 public:
  AgentSearch(AgentId self, const AgentState& start, const Pose& goal, const AgentSpec& spec, const World& world,
              std::span<const AvoidConstraint> constraints, const SearchConfig& cfg, Heuristic& heuristic)
      : self_(self),
        goal_(goal),
        spec_(&spec),
        world_(&world),
        cfg_(cfg),
        heuristic_(&heuristic),
        avoid_(constraints, self, spec, cfg.constraint_window * primitive_substeps(cfg.step_duration, spec)),
        substeps_(primitive_substeps(cfg.step_duration, spec)),
        primitives_(primitive_set(spec, cfg.step_duration)) {
    SearchNode root;
    root.state = start;
    root.h = (*heuristic_)(start, goal_);
    root.f = root.h;
    push(root, discretize(start, cfg_));
  }

  AgentId id() const { return self_; }
  const Pose& goal() const { return goal_; }
  bool finished() const { return finished_; }
  std::size_t neighbors() const { return neighbors_; }
  const SearchNode& node(int idx) const { return nodes_[static_cast<std::size_t>(idx)]; }
  AvoidanceIndex& avoidance() { return avoid_; }
  int substeps() const { return substeps_; }
  void set_traffic(const TrafficIndex* t) { traffic_ = t && !t->empty() ? t : nullptr; }

  bool open_empty() {
    drop_stale();
    return open_.empty();
  }

  /// Best open node without removing it.
  std::optional<int> top() {
    drop_stale();
    if (open_.empty()) return std::nullopt;
    return open_.top().node;
  }

  std::optional<int> pop() {
    drop_stale();
    if (open_.empty()) return std::nullopt;
    const int idx = open_.top().node;
    open_.pop();
    const DiscreteKey key = discretize(nodes_[static_cast<std::size_t>(idx)].state, cfg_);
    in_open_.erase(key);
    closed_.insert(key);
    ++pops_;
    return idx;
  }

  bool near_goal(const AgentState& s) const {
    return norm(s.position() - Vec2{goal_.x, goal_.y}) <= cfg_.goal_position_tolerance &&
           angle_distance(s.yaw, goal_.yaw) <= cfg_.goal_yaw_tolerance;
  }

  /// Goal test plus scheduled analytic expansion. On success the search is
  /// finished and the trajectory is available.
  bool try_finish(int idx) {
    const SearchNode& n = nodes_[static_cast<std::size_t>(idx)];
    const bool near = near_goal(n.state);
    const int interval = std::clamp(static_cast<int>(n.h / (4.0 * primitives_[1].arc_length)) + 1, 1,
                                    std::max(1, cfg_.analytic_interval_max));
    ++since_analytic_;
    if (near || since_analytic_ >= interval) {
      since_analytic_ = 0;
      if (auto tail = analytic_expand(n.state, goal_, *spec_, *world_, avoid_, cfg_)) {
        finish(idx, std::move(*tail));
        return true;
      }
    }
    if (near && !avoid_.blocked_holding(footprint(n.state, *spec_), n.state.t)) {
      finish(idx, {});
      return true;
    }
    return false;
  }

  /// All feasible successors (static collision, constraints, parked
  /// teammates), in primitive order, with g/h/f evaluated.
  std::vector<ChildCandidate> feasible_children(int idx, bool wait_only = false) {
    const SearchNode parent = nodes_[static_cast<std::size_t>(idx)];
    std::vector<ChildCandidate> out;
    for (std::size_t p = wait_only ? 6 : 0; p < primitives_.size(); ++p) {
      ++neighbors_;
      const MotionPrimitive& prim = primitives_[p];
      const ControlInput u = primitive_control(prim, *spec_, substeps_);
      AgentState prev = parent.state;
      bool ok = true;
      double traffic = 0.0;
      for (int k = 0; k < substeps_ && ok; ++k) {
        const AgentState next = step(prev, u, *spec_);
        ok = motion_feasible(prev, next, *spec_, *world_, avoid_);
        if (ok && traffic_) traffic += traffic_->cost(footprint(next.pose(), *spec_), next.t);
        prev = next;
      }
      if (!ok) continue;
      SearchNode child;
      child.state = prev;
      child.parent = idx;
      child.primitive = prim;
      child.g = parent.g + step_cost(parent, prim) + traffic;
      child.h = (*heuristic_)(child.state, goal_);
      child.f = child.g + child.h;
      out.push_back({child, p});
    }
    return out;
  }

  /// Inserts a child unless closed; keeps the cheaper of duplicate open entries.
  void insert(const SearchNode& child) {
    const DiscreteKey key = discretize(child.state, cfg_);
    if (closed_.contains(key)) return;
    auto it = in_open_.find(key);
    if (it == in_open_.end()) {
      push(child, key);
    } else if (child.g < nodes_[static_cast<std::size_t>(it->second)].g) {
      push(child, key);
    }
  }

  void expand_standard(int idx) {
    for (const ChildCandidate& c : feasible_children(idx)) insert(c.node);
  }

  /// Wait-only expansion; with `zero_f` the wait child gets f = 0.
  void expand_wait(int idx, bool zero_f) {
    for (ChildCandidate& c : feasible_children(idx, true)) {
      if (zero_f) c.node.f = 0.0;
      insert(c.node);
    }
  }

  void expand_with(std::vector<ChildCandidate> children) {
    for (const ChildCandidate& c : children) insert(c.node);
  }

  /// Pose at sample `t` along the branch ending at `leaf`, clamped to its ends.
  Pose branch_pose(int leaf, int t) const {
    int child = -1;
    int i = leaf;
    while (i >= 0 && nodes_[static_cast<std::size_t>(i)].state.t > t) {
      child = i;
      i = nodes_[static_cast<std::size_t>(i)].parent;
    }
    if (i < 0) return nodes_[static_cast<std::size_t>(child)].state.pose();
    AgentState s = nodes_[static_cast<std::size_t>(i)].state;
    if (s.t == t || child < 0) return s.pose();
    const ControlInput u = primitive_control(nodes_[static_cast<std::size_t>(child)].primitive, *spec_, substeps_);
    while (s.t < t) s = step(s, u, *spec_);
    return s.pose();
  }

  /// Sampled motion from the root to `leaf`.
  Trajectory branch(int leaf) const {
    Trajectory traj;
    std::vector<int> chain;
    for (int i = leaf; i >= 0; i = nodes_[static_cast<std::size_t>(i)].parent) chain.push_back(i);
    std::reverse(chain.begin(), chain.end());
    traj.states.push_back(nodes_[static_cast<std::size_t>(chain.front())].state);
    for (std::size_t c = 1; c < chain.size(); ++c) {
      const SearchNode& n = nodes_[static_cast<std::size_t>(chain[c])];
      const ControlInput u = primitive_control(n.primitive, *spec_, substeps_);
      AgentState s = traj.states.back();
      for (int k = 0; k < substeps_; ++k) {
        s = step(s, u, *spec_);
        traj.controls.push_back(u);
        traj.states.push_back(s);
      }
    }
    return traj;
  }

  /// Path to the finishing node plus the analytic tail, sample by sample.
  Trajectory trajectory() const {
    Trajectory traj = branch(final_node_);
    for (std::size_t k = 0; k < tail_.states.size(); ++k) {
      traj.controls.push_back(tail_.controls[k]);
      traj.states.push_back(tail_.states[k]);
    }
    return traj;
  }

  AgentState final_state() const {
    return tail_.states.empty() ? nodes_[static_cast<std::size_t>(final_node_)].state : tail_.states.back();
  }

 private:
  struct OpenEntry {
    double f;
    double h;
    std::uint64_t seq;
    int node;
    bool operator<(const OpenEntry& o) const {  // max-heap: "less" means lower priority
      if (f != o.f) return f > o.f;
      if (h != o.h) return h > o.h;
      return seq > o.seq;
    }
  };

  double step_cost(const SearchNode& parent, const MotionPrimitive& prim) const {
    if (prim.direction == Direction::wait) return cfg_.wait_cost_factor * primitives_[1].arc_length;
    double c = prim.arc_length;
    if (prim.direction == Direction::backward) c *= cfg_.reverse_penalty;
    if (parent.parent >= 0 && parent.primitive.direction != Direction::wait && prim.steering != parent.primitive.steering)
      c *= cfg_.steering_change_penalty;
    return c;
  }

  void push(const SearchNode& n, const DiscreteKey& key) {
    nodes_.push_back(n);
    const int idx = static_cast<int>(nodes_.size()) - 1;
    in_open_[key] = idx;
    open_.push({n.f, n.h, seq_++, idx});
  }

  void drop_stale() {
    while (!open_.empty()) {
      const int idx = open_.top().node;
      const DiscreteKey key = discretize(nodes_[static_cast<std::size_t>(idx)].state, cfg_);
      auto it = in_open_.find(key);
      if (it != in_open_.end() && it->second == idx) return;
      open_.pop();
    }
  }

  void finish(int idx, Tail tail) {
    finished_ = true;
    final_node_ = idx;
    tail_ = std::move(tail);
  }

  AgentId self_;
  Pose goal_;
  const AgentSpec* spec_;
  const World* world_;
  SearchConfig cfg_;
  Heuristic* heuristic_;
  AvoidanceIndex avoid_;
  int substeps_;
  std::array<MotionPrimitive, 7> primitives_;

  std::vector<SearchNode> nodes_;
  std::priority_queue<OpenEntry> open_;
  std::unordered_map<DiscreteKey, int, DiscreteKeyHash> in_open_;
  std::unordered_set<DiscreteKey, DiscreteKeyHash> closed_;
  std::uint64_t seq_ = 0;
  std::size_t neighbors_ = 0;
  std::size_t pops_ = 0;
  int since_analytic_ = 0;

  const TrafficIndex* traffic_ = nullptr;
  bool finished_ = false;
  int final_node_ = -1;
  Tail tail_;
};

struct SingleResult {
  SearchStatus status = SearchStatus::exhausted;
  Trajectory trajectory;
  std::size_t neighbors = 0;

  bool ok() const { return status == SearchStatus::success; }
};

inline SingleResult plan_single(AgentId self, const AgentState& start, const Pose& goal, const AgentSpec& spec,
                                const World& world, std::span<const AvoidConstraint> constraints,
                                const SearchConfig& cfg, Heuristic& heuristic, const Deadline& deadline = {},
                                const TrafficIndex* traffic = nullptr) {
  AgentSearch search(self, start, goal, spec, world, constraints, cfg, heuristic);
  search.set_traffic(traffic);
  SingleResult result;
  for (std::size_t iter = 0;; ++iter) {
    if ((iter & 63u) == 0 && deadline.expired()) {
      result.status = SearchStatus::timeout;
      break;
    }
    if (search.neighbors() > cfg.node_budget) {
      result.status = SearchStatus::node_budget;
      break;
    }
    const std::optional<int> n = search.pop();
    if (!n) {
      result.status = SearchStatus::exhausted;
      break;
    }
    if (search.try_finish(*n)) {
      result.status = SearchStatus::success;
      result.trajectory = search.trajectory();
      break;
    }
    search.expand_standard(*n);
  }
  result.neighbors = search.neighbors();
  return result;
}

inline SingleResult plan_single(const AgentState& start, const Pose& goal, const AgentSpec& spec, const World& world,
                                std::span<const AvoidConstraint> constraints = {}, const SearchConfig& cfg = {}) {
  Heuristic h(world, spec, cfg.holonomic_cell);
  return plan_single(static_cast<AgentId>(-1), start, goal, spec, world, constraints, cfg, h);
}

}  // namespace scmp
