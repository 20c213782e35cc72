// scmp: plan, benchmark, audit and render cooperative multi-agent runs.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "scmp/scmp.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("scmp");
  logger->set_pattern("[%l] %v");
  logger->set_level(spdlog::level::warn);
  if (const char* env = std::getenv("SCMP_LOG")) {
    const spdlog::level::level_enum lvl = spdlog::level::from_str(env);
    if (lvl == spdlog::level::off && std::string(env) != "off")
      logger->warn("SCMP_LOG: unknown level '{}', keeping 'warn'", env);
    else
      logger->set_level(lvl);
  }
  spdlog::set_default_logger(logger);
}

std::vector<std::pair<std::string, std::string>> split_overrides(const std::vector<std::string>& raw) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const std::string& kv : raw) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw scmp::FormatError("config override '" + kv + "': expected key=value");
    out.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& text, const char* what) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw scmp::FormatError(std::string(what) + ": bad integer '" + item + "'");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

scmp::PlanMode parse_mode(const std::string& m) {
  if (m == "complete") return scmp::PlanMode::complete;
  if (m == "root_only") return scmp::PlanMode::root_only;
  throw scmp::FormatError("--mode: expected 'complete' or 'root_only'");
}

std::string stage_path(const std::string& path, std::size_t stage, std::size_t stages) {
  if (stages <= 1) return path;
  const auto dot = path.rfind('.');
  const auto slash = path.rfind('/');
  const std::string tag = ".stage" + std::to_string(stage);
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path + tag;
  return path.substr(0, dot) + tag + path.substr(dot);
}

void write_svgs(const scmp::Scenario& s, const std::vector<std::vector<scmp::Trajectory>>& stages,
                const std::string& path, const scmp::SvgOptions& opt) {
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const std::string p = stage_path(path, i, stages.size());
    scmp::write_file(p, scmp::render_svg(s.world, s.spec, s.stages[i], stages[i], opt));
    spdlog::info("wrote {}", p);
  }
}

struct PlanArgs {
  std::string scenario, out, svg, mode = "complete";
  double time_limit = 90.0;
  std::size_t node_budget = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> overrides;
  bool include_timing = false;
};

int run_plan(const PlanArgs& a, const CLI::App& cmd) {
  auto overrides = split_overrides(a.overrides);
  if (cmd.count("--time-limit")) overrides.emplace_back("time_limit_s", std::to_string(a.time_limit));
  if (cmd.count("--node-budget")) overrides.emplace_back("node_budget", std::to_string(a.node_budget));
  if (cmd.count("--seed")) overrides.emplace_back("seed", std::to_string(a.seed));
  const scmp::ScenarioFile file = scmp::load_scenario(a.scenario, overrides);
  const scmp::Scenario& s = file.scenario;
  spdlog::info("planning {} agents over {} stage(s), time limit {} s", s.agent_count(), s.stages.size(),
               file.limits.time_limit_s);

  const scmp::StagesResult r = scmp::plan_stages(s, file.limits, parse_mode(a.mode));
  const scmp::SolutionFile sol = scmp::make_solution_file(s, file.limits, r, a.include_timing);
  scmp::emit_solution(sol, a.out);
  spdlog::info("status {} after {:.2f} s, {} high-level nodes", scmp::to_string(r.status), r.totals().runtime_s,
               r.totals().high_level_nodes);
  if (!a.svg.empty() && r.ok()) write_svgs(s, sol.stages, a.svg, {});
  if (!r.ok()) {
    std::cerr << "planning failed: " << scmp::to_string(r.status);
    if (r.failed_stage) std::cerr << " in stage " << *r.failed_stage;
    std::cerr << '\n';
    return kFailed;
  }
  return kOk;
}

struct BenchArgs {
  scmp::BenchParams params;
  std::string groups = "4", mode = "complete", out, table;
  std::uint64_t seed = 0;
  std::size_t runs = 10;
  unsigned jobs = 1;
  double time_limit = 90.0;
  std::size_t node_budget = 0;
  std::vector<std::string> overrides;
  bool include_timing = false;
};

int run_bench(BenchArgs a, const CLI::App& cmd) {
  a.params.group_sizes = parse_int_list(a.groups, "--groups");
  const scmp::PlanMode mode = parse_mode(a.mode);
  auto overrides = split_overrides(a.overrides);
  if (cmd.count("--time-limit")) overrides.emplace_back("time_limit_s", std::to_string(a.time_limit));
  if (cmd.count("--node-budget")) overrides.emplace_back("node_budget", std::to_string(a.node_budget));

  scmp::PlannerConfig cfg;
  scmp::Limits limits;
  scmp::ojson cj = scmp::ojson::object();
  for (const auto& [k, v] : overrides) cj[k] = scmp::parse_override_value(k, v);
  scmp::config_from_json(scmp::io_detail::Reader(cj, "config"), cfg, limits);
  cfg.csha.validate();

  std::vector<scmp::SuiteCase> cases;
  for (std::size_t k = 0; k < a.runs; ++k) {
    const std::uint64_t seed = a.seed + k;
    scmp::Scenario s = scmp::generate_benchmark(a.params, seed);
    s.config = cfg;
    s.config.seed = seed;
    cases.push_back({"run" + std::to_string(k), std::move(s)});
  }
  spdlog::info("bench: {} runs, {} job(s)", cases.size(), a.jobs);
  const scmp::SuiteReport rep = scmp::run_suite(cases, limits, a.jobs, mode);
  const std::string table = scmp::report_table(rep, a.include_timing);
  std::cout << table;
  if (!a.table.empty()) scmp::write_file(a.table, table);
  if (!a.out.empty()) {
    scmp::ojson params = scmp::bench_params_to_json(a.params, a.seed, a.runs, a.mode.c_str());
    params["config"] = scmp::config_to_json(cfg, limits);
    scmp::write_file(a.out, scmp::to_text(scmp::report_to_json(rep, params, a.include_timing)));
  }
  return kOk;
}

struct CheckArgs {
  std::string scenario, solution, svg, snapshots;
  std::vector<std::string> overrides;
};

int run_check(const CheckArgs& a) {
  const scmp::ScenarioFile file = scmp::load_scenario(a.scenario, split_overrides(a.overrides));
  const scmp::SolutionFile sol = scmp::load_solution(a.solution);
  if (sol.status != scmp::PlanStatus::success) {
    std::cout << "solution records a failed run (" << scmp::to_string(sol.status) << "); nothing to audit\n";
    return kFailed;
  }
  scmp::AuditOptions opt;
  opt.quantum = 5e-7;
  const scmp::AuditReport rep = scmp::audit_run(file.scenario, sol.stages, opt);
  for (const std::string& m : rep.messages) std::cout << m << '\n';
  std::cout << fmt::format(
      "static collisions {}, body conflicts {}, dynamics errors {}, radius violations {}, control violations {}, "
      "structure errors {}\n",
      rep.static_collisions, rep.body_conflicts, rep.dynamics_errors, rep.radius_violations, rep.control_violations,
      rep.structure_errors);
  std::cout << (rep.ok() ? "PASS\n" : "FAIL\n");
  return rep.ok() ? kOk : kFailed;
}

int run_render(const CheckArgs& a) {
  const scmp::ScenarioFile file = scmp::load_scenario(a.scenario);
  const scmp::SolutionFile sol = scmp::load_solution(a.solution);
  scmp::SvgOptions opt;
  if (!a.snapshots.empty()) opt.snapshot_steps = parse_int_list(a.snapshots, "--snapshots");
  if (sol.stages.size() != file.scenario.stages.size()) {
    std::cerr << "solution has no trajectories for this scenario\n";
    return kFailed;
  }
  write_svgs(file.scenario, sol.stages, a.svg, opt);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Cooperative motion planning for Ackermann vehicles"};
  app.require_subcommand(1);

  PlanArgs plan;
  CLI::App* p = app.add_subcommand("plan", "plan a scenario file and write the solution");
  p->add_option("--scenario", plan.scenario, "scenario file")->required()->check(CLI::ExistingFile);
  p->add_option("--out", plan.out, "solution file to write")->required();
  p->add_option("--time-limit", plan.time_limit, "wall-clock cap in seconds")->capture_default_str();
  p->add_option("--node-budget", plan.node_budget, "node budget per low-level query");
  p->add_option("--seed", plan.seed, "seed recorded with the run");
  p->add_option("--svg", plan.svg, "also render the solution to this SVG file");
  p->add_option("--config-override", plan.overrides, "key=value applied to the scenario config");
  p->add_option("--mode", plan.mode, "complete or root_only")->capture_default_str();
  p->add_flag("--include-timing", plan.include_timing, "record wall-clock runtime in the output");

  BenchArgs bench;
  CLI::App* b = app.add_subcommand("bench", "generate seeded scenarios and report aggregate results");
  b->add_option("--seed", bench.seed, "seed of the first run; run k uses seed + k")->capture_default_str();
  b->add_option("--runs", bench.runs, "number of scenarios")->capture_default_str();
  b->add_option("--width", bench.params.width, "core map width (m)")->capture_default_str();
  b->add_option("--height", bench.params.height, "core map height (m)")->capture_default_str();
  b->add_option("--obstacles", bench.params.obstacles, "circular obstacles")->capture_default_str();
  b->add_option("--obstacle-radius", bench.params.obstacle_radius)->capture_default_str();
  b->add_option("--groups", bench.groups, "comma-separated line-formation sizes")->capture_default_str();
  b->add_option("--outliers", bench.params.outliers)->capture_default_str();
  b->add_option("--spacing", bench.params.spacing, "neighbour spacing (m)")->capture_default_str();
  b->add_option("--time-limit", bench.time_limit, "per-scenario cap in seconds")->capture_default_str();
  b->add_option("--node-budget", bench.node_budget, "node budget per low-level query");
  b->add_option("--jobs", bench.jobs, "scenarios planned in parallel")->capture_default_str();
  b->add_option("--mode", bench.mode, "complete or root_only")->capture_default_str();
  b->add_option("--out", bench.out, "JSON report file");
  b->add_option("--table", bench.table, "text table file");
  b->add_option("--config-override", bench.overrides, "key=value applied to every run");
  b->add_flag("--include-timing", bench.include_timing, "record wall-clock runtimes in the report");

  CheckArgs check;
  CLI::App* c = app.add_subcommand("check", "audit a solution against its scenario");
  c->add_option("--scenario", check.scenario)->required()->check(CLI::ExistingFile);
  c->add_option("--solution", check.solution)->required()->check(CLI::ExistingFile);
  c->add_option("--config-override", check.overrides, "key=value applied to the scenario config");

  CheckArgs render;
  CLI::App* r = app.add_subcommand("render", "draw a solution as SVG");
  r->add_option("--scenario", render.scenario)->required()->check(CLI::ExistingFile);
  r->add_option("--solution", render.solution)->required()->check(CLI::ExistingFile);
  r->add_option("--svg", render.svg, "output file")->required();
  r->add_option("--snapshots", render.snapshots, "comma-separated sample indices for body snapshots");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kUsage;
  }

  try {
    if (*p) return run_plan(plan, *p);
    if (*b) return run_bench(bench, *b);
    if (*c) return run_check(check);
    if (*r) return run_render(render);
  } catch (const scmp::FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const scmp::GenerationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const scmp::ScenarioError& e) {
    std::cerr << "invalid scenario: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailed;
  }
  return kUsage;
}
