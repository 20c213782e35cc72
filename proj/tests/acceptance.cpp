// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "scmp/scmp.hpp"

using namespace scmp;
namespace fs = std::filesystem;

namespace {

const std::string kCli = SCMP_CLI_PATH;
const std::string kScenarios = SCMP_SCENARIO_DIR;

// Seeds for the generated suites; never used while developing the planner.
constexpr std::uint64_t kSuiteSeed = 7001;
constexpr std::uint64_t kLineSeed = 7201;
constexpr std::uint64_t kLargeSeed = 7301;

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int run(const std::string& cmd) {
  const int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

struct SuiteOutcome {
  int cases = 0;
  int cp_success = 0;
  int root_success = 0;
  int audited = 0;
  std::size_t violations = 0;
  std::string first_violation;
  double cp_seconds = 0.0;
};

SuiteOutcome feasibility_suite(const fs::path& tmp) {
  SuiteOutcome out;
  const BenchParams params{50.0, 50.0, 25, 0.8, {4}, 2, 10.0};
  Limits limits;
  limits.time_limit_s = 90.0;
  for (std::uint64_t k = 0; k < 50; ++k) {
    const Scenario s = generate_benchmark(params, kSuiteSeed + k);
    ++out.cases;
    const auto t0 = std::chrono::steady_clock::now();
    const StagesResult r = plan_stages(s, limits);
    out.cp_seconds += seconds_since(t0);
    if (plan_stages(s, limits, PlanMode::root_only).ok()) ++out.root_success;
    if (!r.ok()) continue;
    ++out.cp_success;

    std::vector<std::vector<Trajectory>> stages;
    for (const PlanResult& p : r.stages) stages.push_back(p.trajectories);
    AuditReport mem = audit_run(s, stages);

    // Same audit on the written file, as the check command sees it.
    const std::string path = (tmp / fmt::format("suite_{}.json", k)).string();
    emit_solution(make_solution_file(s, limits, r), path);
    AuditOptions file_opt;
    file_opt.quantum = 5e-7;
    const AuditReport file = audit_run(s, load_solution(path).stages, file_opt);

    ++out.audited;
    out.violations += mem.total() + file.total();
    if (out.first_violation.empty() && !(mem.ok() && file.ok()))
      out.first_violation = fmt::format("seed {}: {}", kSuiteSeed + k,
                                        !mem.messages.empty() ? mem.messages.front() : file.messages.front());
  }
  return out;
}

Verdict criterion1(const SuiteOutcome& o) {
  const bool pass = o.violations == 0 && o.cp_seconds < 300.0 && o.audited == o.cp_success;
  std::string d = fmt::format("{}/{} solved, {} solutions audited, {} violations, planning time {:.1f} s", o.cp_success,
                              o.cases, o.audited, o.violations, o.cp_seconds);
  if (!o.first_violation.empty()) d += "; first: " + o.first_violation;
  return {pass, d};
}

Verdict criterion2(const SuiteOutcome& o) {
  const double cp = double(o.cp_success) / o.cases;
  const double root = double(o.root_success) / o.cases;
  return {cp >= root && cp >= 0.9, fmt::format("conflict tree {:.0f}%, root only {:.0f}%", 100 * cp, 100 * root)};
}

Verdict criterion3() {
  int failed = 0;
  std::vector<std::string> bad;
  auto near = [&](const char* what, double got, double want) {
    if (std::abs(got - want) > 1e-9) {
      ++failed;
      bad.push_back(fmt::format("{} = {:.12f}, want {:.12f}", what, got, want));
    }
  };
  near("yaw_rate(2, pi/4, 2)", yaw_rate(2.0, kPi / 4, 2.0), 1.0);
  near("v / yaw_rate at r_min 3.5, L 3", 2.5 / yaw_rate(2.5, std::atan(3.0 / 3.5), 3.0), 3.5);

  AgentSpec spec;
  spec.sample_time = 0.1;
  const AgentState s = step({0, 0, kPi / 2, 3}, {2.0, 0.5}, spec);
  near("step x", s.x, 0.0);
  near("step y", s.y, 0.2);
  near("step yaw", s.yaw, kPi / 2 + 0.05);
  near("step t", s.t, 4);

  near("shape_distance (1,1,0)", shape_distance({1, 1, 0}, {0, 0, 0}, 1.0), 2.0);
  near("shape_distance yaw", shape_distance({0, 0, kPi / 2}, {0, 0, 0}, 2.0), kPi);

  const RelativeStates r{{{0, 0}, {-5, 0}, {5, 0}}};
  const std::vector<Pose> ideal = ideal_states_cal({10, 10, 0.3}, 1, r);
  near("ideal[0].x", ideal[0].x, 15);
  near("ideal[0].y", ideal[0].y, 10);
  near("ideal[2].x", ideal[2].x, 20);
  near("ideal[2].yaw", ideal[2].yaw, 0.3);

  auto member = [](double x, double yaw) {
    Trajectory tr;
    tr.states = {{x - 1, 0, yaw, 0}, {x, 0, yaw, 1}};
    tr.controls = {{}};
    return tr;
  };
  const std::vector<Trajectory> yaws{member(0, 0), member(5, kPi / 2)};
  near("AD {0, pi/2}", angle_deviation(yaws, {1, 1}), kPi / 4);
  const std::vector<Trajectory> spaced{member(0, 0), member(7, 0)};
  near("CD spacing 7 vs 5", coordinate_deviation(spaced, RelativeStates{{{0, 0}, {5, 0}}}, {1, 1}), 1.0);

  std::string d = fmt::format("{} formula checks off", failed);
  if (!bad.empty()) d += ": " + bad.front();
  return {failed == 0, d};
}

Verdict criterion4() {
  auto scenario = [](std::vector<Pose> starts, std::vector<Pose> goals) {
    Scenario s;
    s.world.width = 50;
    s.world.height = 50;
    s.starts = std::move(starts);
    Stage st;
    st.outliers = {0, 1};
    st.goals = std::move(goals);
    s.stages.push_back(st);
    validate_scenario(s);
    return s;
  };
  const PlanResult head_on = plan(scenario({{5, 25, 0}, {45, 25, kPi}}, {{45, 25, 0}, {5, 25, kPi}}));
  const PlanResult apart = plan(scenario({{5, 10, 0}, {5, 40, 0}}, {{45, 10, 0}, {45, 40, 0}}));
  const std::size_t h = head_on.stats.high_level_nodes;
  const bool pass = head_on.ok() && h >= 2 && h % 2 == 0 && apart.ok() && apart.stats.high_level_nodes == 0;
  return {pass, fmt::format("head-on: {} with {} high-level nodes; conflict-free: {} with {}", to_string(head_on.status),
                            h, to_string(apart.status), apart.stats.high_level_nodes)};
}

Verdict criterion5() {
  bool pass = true;
  std::string d;
  for (int n : {4, 8, 16}) {
    const Scenario s = generate_benchmark(BenchParams{100, 100, 0, 0.8, {n}, 0, 10.0}, kLineSeed + n);
    const StagesResult r = plan_stages(s);
    const RunMetrics m = compute_metrics(s, r);
    const bool ok = r.ok() && std::isfinite(m.cd_m) && std::isfinite(m.ad_rad) && m.cd_m <= 3.0 && m.ad_rad <= 0.35;
    pass = pass && ok;
    d += fmt::format("{}{} agents: {} CD {:.2f} m AD {:.3f} rad", d.empty() ? "" : "; ", n, to_string(r.status), m.cd_m,
                     m.ad_rad);
  }
  return {pass, d};
}

Verdict criterion6(const fs::path& tmp) {
  const Scenario s = generate_benchmark(BenchParams{}, kSuiteSeed + 3);
  const std::string scen = (tmp / "det_scenario.json").string();
  emit_scenario(s, Limits{}, scen);
  auto file = [&](const char* name) { return (tmp / name).string(); };
  const int p1 = run(fmt::format("{} plan --scenario {} --out {}", kCli, scen, file("p1.json")));
  const int p2 = run(fmt::format("{} plan --scenario {} --out {}", kCli, scen, file("p2.json")));
  const std::string bench = fmt::format("{} bench --seed {} --runs 3 --out ", kCli, kSuiteSeed + 10);
  const int b1 = run(bench + file("b1.json"));
  const int b2 = run(bench + file("b2.json"));
  const bool plans_same = p1 == 0 && p2 == 0 && read_file(file("p1.json")) == read_file(file("p2.json"));
  const bool bench_same = b1 == 0 && b2 == 0 && read_file(file("b1.json")) == read_file(file("b2.json"));
  return {plans_same && bench_same, fmt::format("plan files {}, bench reports {}", plans_same ? "identical" : "DIFFER",
                                                bench_same ? "identical" : "DIFFER")};
}

Verdict criterion7() {
  const ScenarioFile f = load_scenario(kScenarios + "/two_stage_formation.json");
  const StagesResult r = plan_stages(f.scenario, f.limits);
  if (!r.ok() || r.stages.size() != 2) return {false, fmt::format("planning ended with {}", to_string(r.status))};
  std::size_t breaks = 0;
  for (std::size_t a = 0; a < f.scenario.agent_count(); ++a)
    breaks += !(r.stages[1].trajectories[a].states.front().pose() == r.stages[0].trajectories[a].states.back().pose());
  const bool free0 = !find_first_body_conflict(r.stages[0].trajectories, f.scenario.spec);
  const bool free1 = !find_first_body_conflict(r.stages[1].trajectories, f.scenario.spec);
  std::vector<std::vector<Trajectory>> stages{r.stages[0].trajectories, r.stages[1].trajectories};
  const AuditReport rep = audit_run(f.scenario, stages);
  return {breaks == 0 && free0 && free1 && rep.ok(),
          fmt::format("{} agents, {} boundary mismatches, stage conflicts {}/{}, audit violations {}",
                      f.scenario.agent_count(), breaks, free0 ? "none" : "FOUND", free1 ? "none" : "FOUND", rep.total())};
}

Verdict criterion8() {
  const Scenario s = generate_benchmark(BenchParams{300, 300, 0, 0.8, {8, 8, 8}, 6, 10.0}, kLargeSeed);
  Limits limits;
  limits.time_limit_s = 90.0;
  const auto t0 = std::chrono::steady_clock::now();
  const StagesResult r = plan_stages(s, limits);
  const double secs = seconds_since(t0);
  std::vector<std::vector<Trajectory>> stages;
  for (const PlanResult& p : r.stages) stages.push_back(p.trajectories);
  const bool audited = r.ok() && audit_run(s, stages).ok();
  return {r.ok() && secs < 90.0 && audited,
          fmt::format("{} agents on an empty 300x300 map: {} in {:.1f} s; baseline runtime/flowtime tables and "
                      "100-agent sweeps are not reproduced",
                      s.agent_count(), to_string(r.status), secs)};
}

}  // namespace

int main() {
  const fs::path tmp = fs::temp_directory_path() / fmt::format("scmp_acceptance_{}", ::getpid());
  fs::create_directories(tmp);

  std::vector<Verdict> verdicts;
  auto report = [&](int n, const char* title, Verdict v) {
    std::printf("criterion %d %s: %s (%s)\n", n, v.pass ? "PASS" : "FAIL", title, v.detail.c_str());
    std::fflush(stdout);
    verdicts.push_back(std::move(v));
  };

  const SuiteOutcome suite = feasibility_suite(tmp);
  report(1, "feasibility suite", criterion1(suite));
  report(2, "success rate ordering", criterion2(suite));
  report(3, "formula examples", criterion3());
  report(4, "high-level node counter", criterion4());
  report(5, "shape retention", criterion5());
  report(6, "determinism", criterion6(tmp));
  report(7, "multi-stage continuity", criterion7());
  report(8, "30-agent smoke run", criterion8());

  fs::remove_all(tmp);
  for (const Verdict& v : verdicts)
    if (!v.pass) return 1;
  return 0;
}
