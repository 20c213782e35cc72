#pragma once

// Seeded benchmark layouts (starts in a bottom band, goals in a top band,
// random circular obstacles in between) and a suite runner.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "scmp/metrics.hpp"

namespace scmp {

struct BenchParams {
  double width = 50.0;
  double height = 50.0;
  int obstacles = 25;
  double obstacle_radius = 0.8;
  std::vector<int> group_sizes{4};  // line formations
  int outliers = 2;
  double spacing = 10.0;  // distance between neighbouring slots
  int max_retries = 100000;
};

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline RelativeStates line_formation(int n, double spacing) {
  RelativeStates r;
  for (int k = 0; k < n; ++k) r.offsets.push_back({k * spacing, 0.0});
  return r;
}

/// Pure function of (params, seed).
inline Scenario generate_benchmark(const BenchParams& p, std::uint64_t seed) {
  if (p.spacing <= 0.0 || p.width <= 0.0 || p.height <= 0.0) throw GenerationError("bench: bad dimensions");
  for (int n : p.group_sizes)
    if (n < 1) throw GenerationError("bench: group sizes must be >= 1");
  std::mt19937_64 rng(seed);

  const int widest = p.group_sizes.empty() ? 1 : *std::max_element(p.group_sizes.begin(), p.group_sizes.end());
  const double width = std::max(p.width, widest * p.spacing);
  const int columns = static_cast<int>(std::floor(width / p.spacing + 1e-9));

  // Bottom rows: groups packed left to right, then outliers in random free slots.
  // Top rows: same packing, but group order and column offsets are shuffled.
  struct Placement {
    int row = 0;
    int col = 0;
  };
  auto pack = [&](bool shuffle) {
    std::vector<std::vector<char>> rows;
    std::vector<std::size_t> order(p.group_sizes.size());
    for (std::size_t g = 0; g < order.size(); ++g) order[g] = g;
    if (shuffle) std::shuffle(order.begin(), order.end(), rng);
    std::vector<Placement> group_at(p.group_sizes.size());
    for (std::size_t g : order) {
      const int n = p.group_sizes[g];
      std::size_t r = 0;
      int col = -1;
      for (; r < rows.size(); ++r) {
        int run = 0;
        for (int c = 0; c < columns; ++c) {
          run = rows[r][static_cast<std::size_t>(c)] ? 0 : run + 1;
          if (run == n) {
            col = c - n + 1;
            break;
          }
        }
        if (col >= 0) break;
      }
      if (col < 0) {
        rows.emplace_back(static_cast<std::size_t>(columns), 0);
        r = rows.size() - 1;
        col = 0;
      }
      if (shuffle) {
        int hi = col;
        while (hi + n < columns && !rows[r][static_cast<std::size_t>(hi + n)]) ++hi;
        col = std::uniform_int_distribution<int>(col, hi)(rng);
      }
      for (int c = col; c < col + n; ++c) rows[r][static_cast<std::size_t>(c)] = 1;
      group_at[g] = {static_cast<int>(r), col};
    }
    std::vector<Placement> free;
    auto collect_free = [&] {
      free.clear();
      for (std::size_t r = 0; r < rows.size(); ++r)
        for (int c = 0; c < columns; ++c)
          if (!rows[r][static_cast<std::size_t>(c)]) free.push_back({static_cast<int>(r), c});
    };
    collect_free();
    while (static_cast<int>(free.size()) < p.outliers) {
      rows.emplace_back(static_cast<std::size_t>(columns), 0);
      collect_free();
    }
    std::shuffle(free.begin(), free.end(), rng);
    std::vector<Placement> outlier_at(free.begin(), free.begin() + p.outliers);
    return std::make_tuple(group_at, outlier_at, static_cast<int>(rows.size()));
  };

  const auto [g_start, o_start, rows_start] = pack(false);
  const auto [g_goal, o_goal, rows_goal] = pack(true);
  const int band_rows = std::max(rows_start, rows_goal);

  Scenario s;
  s.world.width = width;
  s.world.height = p.height;
  s.world.band_expansion = band_rows * p.spacing;
  auto slot_x = [&](int col) { return 0.5 * p.spacing + col * p.spacing; };
  auto start_y = [&](int row) { return -0.5 * p.spacing - row * p.spacing; };
  auto goal_y = [&](int row) { return p.height + 0.5 * p.spacing + row * p.spacing; };

  Stage stage;
  AgentId next = 0;
  for (std::size_t g = 0; g < p.group_sizes.size(); ++g) {
    GroupSpec grp;
    grp.shape = line_formation(p.group_sizes[g], p.spacing);
    for (int k = 0; k < p.group_sizes[g]; ++k) {
      grp.members.push_back(next++);
      s.starts.push_back({slot_x(g_start[g].col + k), start_y(g_start[g].row), kPi / 2.0});
      stage.goals.push_back({slot_x(g_goal[g].col + k), goal_y(g_goal[g].row), kPi / 2.0});
    }
    stage.groups.push_back(std::move(grp));
  }
  for (int k = 0; k < p.outliers; ++k) {
    stage.outliers.push_back(next++);
    s.starts.push_back({slot_x(o_start[k].col), start_y(o_start[k].row), kPi / 2.0});
    stage.goals.push_back({slot_x(o_goal[k].col), goal_y(o_goal[k].row), kPi / 2.0});
  }
  s.stages.push_back(std::move(stage));

  const double r = p.obstacle_radius;
  if (p.obstacles > 0 && (2.0 * r >= width || 2.0 * r >= p.height)) throw GenerationError("bench: obstacles too large");
  std::uniform_real_distribution<double> ux(r, width - r);
  std::uniform_real_distribution<double> uy(r, p.height - r);
  int retries = 0;
  while (static_cast<int>(s.world.obstacles.size()) < p.obstacles) {
    const Vec2 c{ux(rng), uy(rng)};
    bool ok = true;
    for (const Obstacle& o : s.world.obstacles)
      if (norm(std::get<Circle>(o.shape).center - c) <= 2.0 * r) ok = false;
    if (ok) {
      s.world.obstacles.push_back(Obstacle::circle(c, r));
    } else if (++retries > p.max_retries) {
      throw GenerationError("bench: could not place " + std::to_string(p.obstacles) + " obstacles");
    }
  }
  s.config.seed = seed;
  validate_scenario(s);
  return s;
}

struct SuiteRow {
  std::string name;
  std::uint64_t seed = 0;
  PlanStatus status = PlanStatus::exhausted;
  std::size_t agents = 0;
  RunMetrics metrics;
};

struct SuiteAggregate {
  std::size_t runs = 0;
  std::size_t successes = 0;
  double success_rate = 0.0;
  double mean_runtime_s = 0.0;  // over successes
  double mean_flowtime_s = 0.0;
  double mean_low_level_nodes = 0.0;
  double mean_high_level_nodes = 0.0;
  double mean_ad_rad = std::numeric_limits<double>::quiet_NaN();
  double mean_cd_m = std::numeric_limits<double>::quiet_NaN();
};

struct SuiteReport {
  std::vector<SuiteRow> rows;
  SuiteAggregate aggregate;
};

struct SuiteCase {
  std::string name;
  Scenario scenario;
};

/// Order-independent reductions over successful rows.
inline SuiteAggregate aggregate(std::span<const SuiteRow> rows) {
  SuiteAggregate a;
  a.runs = rows.size();
  double rt = 0, ft = 0, ll = 0, hl = 0, ad = 0, cd = 0;
  std::size_t formed = 0;
  for (const SuiteRow& r : rows) {
    if (!r.metrics.success) continue;
    ++a.successes;
    rt += r.metrics.runtime_s;
    ft += r.metrics.avg_flowtime_s;
    ll += static_cast<double>(r.metrics.low_level_nodes);
    hl += static_cast<double>(r.metrics.high_level_nodes);
    if (std::isfinite(r.metrics.ad_rad)) {
      ++formed;
      ad += r.metrics.ad_rad;
      cd += r.metrics.cd_m;
    }
  }
  if (a.runs) a.success_rate = static_cast<double>(a.successes) / static_cast<double>(a.runs);
  if (a.successes) {
    const double n = static_cast<double>(a.successes);
    a.mean_runtime_s = rt / n;
    a.mean_flowtime_s = ft / n;
    a.mean_low_level_nodes = ll / n;
    a.mean_high_level_nodes = hl / n;
  }
  if (formed) {
    a.mean_ad_rad = ad / static_cast<double>(formed);
    a.mean_cd_m = cd / static_cast<double>(formed);
  }
  return a;
}

/// Plans every case under the limits, `jobs` at a time. Rows keep case order.
inline SuiteReport run_suite(std::span<const SuiteCase> cases, const Limits& limits, unsigned jobs = 1,
                             PlanMode mode = PlanMode::complete) {
  SuiteReport report;
  report.rows.resize(cases.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cases.size(); i = next++) {
      const Scenario& s = cases[i].scenario;
      const StagesResult r = plan_stages(s, limits, mode);
      SuiteRow& row = report.rows[i];
      row.name = cases[i].name;
      row.seed = s.config.seed;
      row.status = r.status;
      row.agents = s.agent_count();
      row.metrics = compute_metrics(s, r);
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(1, cases.size()))));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < jobs; ++k) pool.emplace_back(worker);
  }
  report.aggregate = aggregate(report.rows);
  return report;
}

}  // namespace scmp
