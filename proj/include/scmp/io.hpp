#pragma once

// JSON scenario and solution files. Emission is deterministic: fixed key
// order, every real number printed with six decimals.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "scmp/bench.hpp"

namespace scmp {

inline constexpr const char* kToolVersion = "0.4.0";

using ojson = nlohmann::ordered_json;

/// Malformed file: carries the field path (or line/column for syntax errors).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- writer ----------------------------------------------------------------

namespace io_detail {

inline std::string real(double v) {
  if (!std::isfinite(v)) return "null";
  std::string s = fmt::format("{:.6f}", v);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

inline bool is_scalar(const ojson& j) { return !j.is_object() && !j.is_array(); }

inline bool flat_array(const ojson& j) {
  if (!j.is_array()) return false;
  for (const ojson& e : j)
    if (!is_scalar(e)) return false;
  return true;
}

inline void write(std::string& out, const ojson& j, int depth) {
  const std::string pad(static_cast<std::size_t>(2 * depth), ' ');
  const std::string inner(static_cast<std::size_t>(2 * depth + 2), ' ');
  switch (j.type()) {
    case ojson::value_t::number_float:
      out += real(j.get<double>());
      return;
    case ojson::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      std::size_t k = 0;
      for (auto it = j.begin(); it != j.end(); ++it) {
        out += inner + ojson(it.key()).dump() + ": ";
        write(out, it.value(), depth + 1);
        out += ++k < j.size() ? ",\n" : "\n";
      }
      out += pad + "}";
      return;
    }
    case ojson::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      if (flat_array(j)) {
        out += "[";
        for (std::size_t k = 0; k < j.size(); ++k) {
          if (k) out += ", ";
          write(out, j[k], depth + 1);
        }
        out += "]";
        return;
      }
      out += "[\n";
      for (std::size_t k = 0; k < j.size(); ++k) {
        out += inner;
        write(out, j[k], depth + 1);
        out += k + 1 < j.size() ? ",\n" : "\n";
      }
      out += pad + "]";
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace io_detail

inline std::string to_text(const ojson& j) {
  std::string out;
  io_detail::write(out, j, 0);
  out += '\n';
  return out;
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << text;
  if (!f) throw std::runtime_error("write to " + path + " failed");
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/// Parses JSON text; syntax errors report line and column.
inline ojson parse_text(const std::string& text, const std::string& source) {
  try {
    return ojson::parse(text);
  } catch (const ojson::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw FormatError(fmt::format("{}:{}:{}: {}", source, line, col, e.what()));
  }
}

// ---- typed field access -----------------------------------------------------

namespace io_detail {

class Reader {
 public:
  Reader(const ojson& j, std::string path) : j_(&j), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const ojson& raw() const { return *j_; }

  [[noreturn]] void fail(const std::string& msg) const { throw FormatError(path_ + ": " + msg); }

  bool has(const char* key) const { return j_->is_object() && j_->contains(key); }

  Reader at(const char* key) const {
    if (!j_->is_object()) fail("expected an object");
    auto it = j_->find(key);
    if (it == j_->end()) fail(std::string("missing field '") + key + "'");
    return {*it, path_ + "." + key};
  }
  Reader item(std::size_t i) const { return {(*j_)[i], path_ + "[" + std::to_string(i) + "]"}; }

  std::size_t size() const {
    if (!j_->is_array()) fail("expected an array");
    return j_->size();
  }

  double real() const {
    if (!j_->is_number()) fail("expected a number");
    const double v = j_->get<double>();
    if (!std::isfinite(v)) fail("expected a finite number");
    return v;
  }
  std::int64_t integer() const {
    if (!j_->is_number_integer()) fail("expected an integer");
    return j_->get<std::int64_t>();
  }
  std::uint64_t unsigned_integer() const {
    if (!j_->is_number_integer() || (!j_->is_number_unsigned() && j_->get<std::int64_t>() < 0))
      fail("expected a non-negative integer");
    return j_->get<std::uint64_t>();
  }
  bool boolean() const {
    if (!j_->is_boolean()) fail("expected true or false");
    return j_->get<bool>();
  }
  std::string string() const {
    if (!j_->is_string()) fail("expected a string");
    return j_->get<std::string>();
  }
  Vec2 vec2() const {
    if (size() != 2) fail("expected [x, y]");
    return {item(0).real(), item(1).real()};
  }
  Pose pose() const {
    if (size() != 3) fail("expected [x, y, yaw]");
    return {item(0).real(), item(1).real(), item(2).real()};
  }

  /// Rejects keys outside `allowed`.
  void only(std::initializer_list<const char*> allowed) const {
    if (!j_->is_object()) fail("expected an object");
    for (auto it = j_->begin(); it != j_->end(); ++it) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || it.key() == a;
      if (!ok) fail("unknown field '" + it.key() + "'");
    }
  }

 private:
  const ojson* j_;
  std::string path_;
};

inline ojson vec(Vec2 v) { return ojson::array({v.x, v.y}); }
inline ojson pose(const Pose& p) { return ojson::array({p.x, p.y, p.yaw}); }

}  // namespace io_detail

// ---- config -----------------------------------------------------------------

/// Every tunable in one flat table: (key, getter/setter) in emission order.
struct ConfigField {
  const char* key;
  enum Kind { real, integer, boolean } kind;
  std::function<ojson(const PlannerConfig&, const Limits&)> get;
  std::function<void(PlannerConfig&, Limits&, const io_detail::Reader&)> set;
};

inline const std::vector<ConfigField>& config_fields() {
  using R = io_detail::Reader;
  using P = PlannerConfig;
  using L = Limits;
#define SCMP_REAL(key, expr)                                                        \
  ConfigField{key, ConfigField::real, [](const P& c, const L& l) { (void)c; (void)l; return ojson(static_cast<double>(expr)); }, \
              [](P& c, L& l, const R& r) { (void)c; (void)l; expr = r.real(); }}
#define SCMP_INT(key, expr, type)                                                   \
  ConfigField{key, ConfigField::integer, [](const P& c, const L& l) { (void)c; (void)l; return ojson(expr); }, \
              [](P& c, L& l, const R& r) {                                          \
                (void)c; (void)l;                                                   \
                const std::int64_t v = r.integer();                                 \
                if (v < 0) r.fail("must be >= 0");                                  \
                expr = static_cast<type>(v);                                        \
              }}
#define SCMP_BOOL(key, expr)                                                        \
  ConfigField{key, ConfigField::boolean, [](const P& c, const L& l) { (void)c; (void)l; return ojson(expr); }, \
              [](P& c, L& l, const R& r) { (void)c; (void)l; expr = r.boolean(); }}
  static const std::vector<ConfigField> fields{
      ConfigField{"seed", ConfigField::integer, [](const P& c, const L&) { return ojson(c.seed); },
                  [](P& c, L&, const R& r) { c.seed = r.unsigned_integer(); }},
      SCMP_REAL("time_limit_s", l.time_limit_s),
      SCMP_INT("node_budget", l.node_budget, std::size_t),
      SCMP_INT("max_ct_expansions", l.max_ct_expansions, std::size_t),
      SCMP_REAL("angle_weight_d", c.csha.angle_weight_d),
      SCMP_REAL("closest_reward_r", c.csha.closest_reward_r),
      SCMP_REAL("remote_threshold", c.csha.remote_threshold),
      SCMP_INT("max_consecutive_waits", c.csha.max_consecutive_waits, int),
      SCMP_BOOL("reward_requires_progress", c.csha.reward_requires_progress),
      SCMP_REAL("analytic_range", c.csha.analytic_range),
      SCMP_REAL("member_wait_cost_factor", c.csha.wait_cost_factor),
      SCMP_BOOL("time_aligned_ideal", c.csha.time_aligned_ideal),
      SCMP_BOOL("interval_constraints", c.interval_constraints),
      SCMP_REAL("traffic_penalty", c.traffic_penalty),
      SCMP_REAL("step_duration", c.search.step_duration),
      SCMP_REAL("reverse_penalty", c.search.reverse_penalty),
      SCMP_REAL("steering_change_penalty", c.search.steering_change_penalty),
      SCMP_REAL("wait_cost_factor", c.search.wait_cost_factor),
      SCMP_INT("constraint_window", c.search.constraint_window, int),
      SCMP_REAL("goal_position_tolerance", c.search.goal_position_tolerance),
      SCMP_REAL("goal_yaw_tolerance", c.search.goal_yaw_tolerance),
      SCMP_REAL("xy_resolution", c.search.xy_resolution),
      SCMP_REAL("yaw_resolution", c.search.yaw_resolution),
      SCMP_INT("analytic_interval_max", c.search.analytic_interval_max, int),
      SCMP_REAL("analytic_radius_factor", c.search.analytic_radius_factor),
      SCMP_REAL("analytic_max_length", c.search.analytic_max_length),
      SCMP_REAL("holonomic_cell", c.search.holonomic_cell),
  };
#undef SCMP_REAL
#undef SCMP_INT
#undef SCMP_BOOL
  return fields;
}

inline ojson config_to_json(const PlannerConfig& c, const Limits& l) {
  ojson j = ojson::object();
  for (const ConfigField& f : config_fields()) j[f.key] = f.get(c, l);
  return j;
}

inline void config_from_json(const io_detail::Reader& r, PlannerConfig& c, Limits& l) {
  if (!r.raw().is_object()) r.fail("expected an object");
  for (auto it = r.raw().begin(); it != r.raw().end(); ++it) {
    const ConfigField* field = nullptr;
    for (const ConfigField& f : config_fields())
      if (it.key() == f.key) field = &f;
    if (!field) r.fail("unknown field '" + it.key() + "'");
    field->set(c, l, r.at(it.key().c_str()));
  }
}

/// Parses the right-hand side of a `key=value` override into a JSON scalar of
/// the kind the key expects.
inline ojson parse_override_value(const std::string& key, const std::string& value) {
  for (const ConfigField& f : config_fields()) {
    if (key != f.key) continue;
    try {
      switch (f.kind) {
        case ConfigField::boolean:
          if (value == "true" || value == "1") return true;
          if (value == "false" || value == "0") return false;
          break;
        case ConfigField::integer: {
          std::size_t used = 0;
          const long long v = std::stoll(value, &used);
          if (used == value.size()) return v;
          break;
        }
        case ConfigField::real: {
          std::size_t used = 0;
          const double v = std::stod(value, &used);
          if (used == value.size()) return v;
          break;
        }
      }
    } catch (const std::exception&) {
    }
    throw FormatError("config override " + key + ": bad value '" + value + "'");
  }
  throw FormatError("config override: unknown key '" + key + "'");
}

// ---- scenario ---------------------------------------------------------------

struct ScenarioFile {
  Scenario scenario;
  Limits limits;
};

inline ojson scenario_to_json(const Scenario& s, const Limits& limits = {}) {
  using io_detail::pose;
  using io_detail::vec;
  ojson j = ojson::object();
  j["map"] = {{"width", s.world.width}, {"height", s.world.height}, {"band_expansion", s.world.band_expansion}};
  ojson obs = ojson::array();
  for (const Obstacle& o : s.world.obstacles) {
    if (const Circle* c = std::get_if<Circle>(&o.shape)) {
      obs.push_back({{"type", "circle"}, {"center", vec(c->center)}, {"radius", c->radius}});
    } else {
      const Polygon4& p = std::get<Polygon4>(o.shape);
      ojson corners = ojson::array();
      for (Vec2 v : p.corners) corners.push_back(vec(v));
      obs.push_back({{"type", "rectangle"}, {"corners", corners}});
    }
  }
  j["obstacles"] = obs;
  const AgentSpec& a = s.spec;
  j["agent_spec"] = {{"wheelbase", a.wheelbase},         {"front", a.front},
                     {"rear", a.rear},                   {"width", a.width},
                     {"v_forward_max", a.v_forward_max}, {"v_backward_max", a.v_backward_max},
                     {"phi_max", a.phi_max},             {"sample_time", a.sample_time},
                     {"inflation", a.inflation}};
  ojson stages = ojson::array();
  for (std::size_t si = 0; si < s.stages.size(); ++si) {
    const Stage& st = s.stages[si];
    auto member = [&](AgentId id) {
      ojson m = ojson::object();
      m["id"] = id;
      if (si == 0) m["start"] = pose(s.starts[id]);
      m["goal"] = pose(st.goals[id]);
      return m;
    };
    ojson groups = ojson::array();
    for (const GroupSpec& g : st.groups) {
      ojson offsets = ojson::array();
      for (Vec2 v : g.shape.offsets) offsets.push_back(vec(v));
      ojson members = ojson::array();
      for (AgentId id : g.members) members.push_back(member(id));
      groups.push_back({{"offsets", offsets}, {"members", members}});
    }
    ojson outliers = ojson::array();
    for (AgentId id : st.outliers) outliers.push_back(member(id));
    stages.push_back({{"groups", groups}, {"outliers", outliers}});
  }
  j["stages"] = stages;
  j["config"] = config_to_json(s.config, limits);
  return j;
}

/// Builds and validates a scenario. Throws FormatError for schema problems and
/// ScenarioError for violated planning preconditions.
inline ScenarioFile scenario_from_json(const ojson& root, const std::string& source = "scenario") {
  using io_detail::Reader;
  const Reader r(root, source);
  r.only({"map", "obstacles", "agent_spec", "stages", "config"});
  ScenarioFile out;
  Scenario& s = out.scenario;

  const Reader map = r.at("map");
  map.only({"width", "height", "band_expansion"});
  s.world.width = map.at("width").real();
  s.world.height = map.at("height").real();
  if (map.has("band_expansion")) s.world.band_expansion = map.at("band_expansion").real();

  if (r.has("obstacles")) {
    const Reader obs = r.at("obstacles");
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const Reader o = obs.item(i);
      const std::string type = o.at("type").string();
      if (type == "circle") {
        o.only({"type", "center", "radius"});
        s.world.obstacles.push_back(Obstacle::circle(o.at("center").vec2(), o.at("radius").real()));
      } else if (type == "rectangle") {
        o.only({"type", "corners"});
        const Reader c = o.at("corners");
        if (c.size() != 4) c.fail("expected four corners");
        s.world.obstacles.push_back(
            Obstacle::rectangle({c.item(0).vec2(), c.item(1).vec2(), c.item(2).vec2(), c.item(3).vec2()}));
      } else {
        o.at("type").fail("expected 'circle' or 'rectangle'");
      }
    }
  }

  if (r.has("agent_spec")) {
    const Reader a = r.at("agent_spec");
    a.only({"wheelbase", "front", "rear", "width", "v_forward_max", "v_backward_max", "phi_max", "sample_time",
            "inflation"});
    auto opt = [&](const char* key, double& v) {
      if (a.has(key)) v = a.at(key).real();
    };
    opt("wheelbase", s.spec.wheelbase);
    opt("front", s.spec.front);
    opt("rear", s.spec.rear);
    opt("width", s.spec.width);
    opt("v_forward_max", s.spec.v_forward_max);
    opt("v_backward_max", s.spec.v_backward_max);
    opt("phi_max", s.spec.phi_max);
    opt("sample_time", s.spec.sample_time);
    opt("inflation", s.spec.inflation);
  }

  const Reader stages = r.at("stages");
  std::map<AgentId, Pose> starts;
  for (std::size_t si = 0; si < stages.size(); ++si) {
    const Reader st = stages.item(si);
    st.only({"groups", "outliers"});
    Stage stage;
    std::map<AgentId, Pose> goals;
    auto member = [&](const Reader& m) {
      m.only({"id", "start", "goal"});
      const std::int64_t raw = m.at("id").integer();
      if (raw < 0) m.at("id").fail("must be >= 0");
      const AgentId id = static_cast<AgentId>(raw);
      if (si == 0) {
        starts[id] = m.at("start").pose();
      } else if (m.has("start")) {
        m.at("start").fail("only first-stage members carry a start; later stages begin where the previous one ended");
      }
      if (!goals.emplace(id, m.at("goal").pose()).second) m.at("id").fail("agent listed twice in this stage");
      return id;
    };
    if (st.has("groups")) {
      const Reader groups = st.at("groups");
      for (std::size_t g = 0; g < groups.size(); ++g) {
        const Reader gr = groups.item(g);
        gr.only({"offsets", "members"});
        GroupSpec spec;
        const Reader off = gr.at("offsets");
        for (std::size_t k = 0; k < off.size(); ++k) spec.shape.offsets.push_back(off.item(k).vec2());
        const Reader mem = gr.at("members");
        for (std::size_t k = 0; k < mem.size(); ++k) spec.members.push_back(member(mem.item(k)));
        stage.groups.push_back(std::move(spec));
      }
    }
    if (st.has("outliers")) {
      const Reader outl = st.at("outliers");
      for (std::size_t k = 0; k < outl.size(); ++k) stage.outliers.push_back(member(outl.item(k)));
    }
    if (si == 0) {
      std::size_t expect = 0;
      for (const auto& [id, p] : starts)
        if (id != expect++) st.fail("agent ids must be 0..n-1 without gaps");
    }
    stage.goals.resize(starts.size());
    for (const auto& [id, p] : goals) {
      if (id >= starts.size()) st.fail("agent " + std::to_string(id) + " does not appear in the first stage");
      stage.goals[id] = p;
    }
    if (goals.size() != starts.size()) st.fail("every agent must appear in every stage");
    s.stages.push_back(std::move(stage));
  }
  for (const auto& [id, p] : starts) s.starts.push_back(p);

  if (r.has("config")) config_from_json(r.at("config"), s.config, out.limits);
  validate_scenario(s);
  if (!(out.limits.time_limit_s > 0.0)) throw ScenarioError("config: time_limit_s must be > 0");
  return out;
}

/// `overrides` are key=value pairs applied to the config section before validation.
inline ScenarioFile load_scenario(const std::string& path,
                                  const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
  ojson j = parse_text(read_file(path), path);
  if (!overrides.empty()) {
    if (!j.is_object()) throw FormatError(path + ": expected an object");
    if (!j.contains("config")) j["config"] = ojson::object();
    for (const auto& [k, v] : overrides) j["config"][k] = parse_override_value(k, v);
  }
  return scenario_from_json(j, path);
}

inline void emit_scenario(const Scenario& s, const Limits& limits, const std::string& path) {
  write_file(path, to_text(scenario_to_json(s, limits)));
}

// ---- solution ---------------------------------------------------------------

struct SolutionFile {
  PlanStatus status = PlanStatus::exhausted;
  std::optional<std::size_t> failed_stage;
  double sample_time = 0.0;
  std::vector<std::vector<Trajectory>> stages;  // [stage][agent]; empty unless successful
  RunMetrics metrics;
  std::size_t conflicts = 0;
  bool include_timing = false;
  ojson config = ojson::object();  // provenance echo
  std::uint64_t seed = 0;
  std::string version = kToolVersion;
};

inline SolutionFile make_solution_file(const Scenario& s, const Limits& limits, const StagesResult& r,
                                       bool include_timing = false) {
  SolutionFile f;
  f.status = r.status;
  f.failed_stage = r.failed_stage;
  f.sample_time = s.spec.sample_time;
  if (r.ok())
    for (const PlanResult& p : r.stages) f.stages.push_back(p.trajectories);
  f.metrics = compute_metrics(s, r);
  f.conflicts = r.totals().conflicts;
  f.include_timing = include_timing;
  f.config = config_to_json(s.config, limits);
  f.seed = s.config.seed;
  return f;
}

inline PlanStatus plan_status_from(const std::string& name, const io_detail::Reader& r) {
  for (PlanStatus s : {PlanStatus::success, PlanStatus::root_failure, PlanStatus::exhausted, PlanStatus::timeout,
                       PlanStatus::budget})
    if (name == to_string(s)) return s;
  r.fail("unknown status '" + name + "'");
}

inline ojson metrics_to_json(const RunMetrics& m, std::size_t conflicts, bool include_timing) {
  ojson j = ojson::object();
  j["success"] = m.success;
  j["avg_flowtime_s"] = m.avg_flowtime_s;
  j["low_level_nodes"] = m.low_level_nodes;
  j["high_level_nodes"] = m.high_level_nodes;
  j["conflicts"] = conflicts;
  j["ad_rad"] = m.ad_rad;
  j["cd_m"] = m.cd_m;
  if (include_timing) j["runtime_s"] = m.runtime_s;
  ojson groups = ojson::array();
  for (const GroupMetrics& g : m.groups)
    groups.push_back({{"stage", g.stage},
                      {"group", g.group},
                      {"window", ojson::array({g.window.first, g.window.last})},
                      {"ad_rad", g.ad_rad},
                      {"cd_m", g.cd_m}});
  j["groups"] = groups;
  return j;
}

inline ojson solution_to_json(const SolutionFile& f) {
  ojson j = ojson::object();
  j["status"] = to_string(f.status);
  if (f.failed_stage) j["failed_stage"] = *f.failed_stage;
  j["sample_time"] = f.sample_time;
  j["fields"] = ojson::array({"t", "x", "y", "yaw", "v", "omega"});
  ojson stages = ojson::array();
  for (const std::vector<Trajectory>& stage : f.stages) {
    ojson agents = ojson::array();
    for (std::size_t a = 0; a < stage.size(); ++a) {
      const Trajectory& tr = stage[a];
      ojson records = ojson::array();
      for (std::size_t k = 0; k < tr.states.size(); ++k) {
        const AgentState& s = tr.states[k];
        const ControlInput u = k < tr.controls.size() ? tr.controls[k] : ControlInput{};
        records.push_back(ojson::array({s.t * f.sample_time, s.x, s.y, s.yaw, u.v, u.omega}));
      }
      agents.push_back({{"id", a}, {"records", records}});
    }
    stages.push_back({{"agents", agents}});
  }
  j["stages"] = stages;
  j["metrics"] = metrics_to_json(f.metrics, f.conflicts, f.include_timing);
  j["provenance"] = {{"tool", "scmp"}, {"version", f.version}, {"seed", f.seed}, {"config", f.config}};
  return j;
}

inline SolutionFile solution_from_json(const ojson& root, const std::string& source = "solution") {
  using io_detail::Reader;
  const Reader r(root, source);
  r.only({"status", "failed_stage", "sample_time", "fields", "stages", "metrics", "provenance"});
  SolutionFile f;
  f.status = plan_status_from(r.at("status").string(), r.at("status"));
  if (r.has("failed_stage")) f.failed_stage = static_cast<std::size_t>(r.at("failed_stage").unsigned_integer());
  f.sample_time = r.at("sample_time").real();
  if (!(f.sample_time > 0.0)) r.at("sample_time").fail("must be > 0");
  if (r.at("fields").raw() != ojson::array({"t", "x", "y", "yaw", "v", "omega"}))
    r.at("fields").fail("expected [\"t\", \"x\", \"y\", \"yaw\", \"v\", \"omega\"]");

  const Reader stages = r.at("stages");
  for (std::size_t si = 0; si < stages.size(); ++si) {
    const Reader agents = stages.item(si).at("agents");
    std::vector<Trajectory> stage;
    for (std::size_t a = 0; a < agents.size(); ++a) {
      const Reader ag = agents.item(a);
      ag.only({"id", "records"});
      if (ag.at("id").integer() != static_cast<std::int64_t>(a)) ag.at("id").fail("agents must be listed by id");
      const Reader recs = ag.at("records");
      if (recs.size() == 0) recs.fail("no records");
      Trajectory tr;
      for (std::size_t k = 0; k < recs.size(); ++k) {
        const Reader rec = recs.item(k);
        if (rec.size() != 6) rec.fail("expected six values");
        const double t = rec.item(0).real();
        const double steps = t / f.sample_time;
        const int ti = static_cast<int>(std::lround(steps));
        if (std::abs(steps - ti) > 1e-6) rec.item(0).fail("time is not a multiple of sample_time");
        if (!tr.states.empty() && ti <= tr.states.back().t) rec.item(0).fail("times must be strictly increasing");
        tr.states.push_back({rec.item(1).real(), rec.item(2).real(), rec.item(3).real(), ti});
        if (k + 1 < recs.size()) tr.controls.push_back({rec.item(4).real(), rec.item(5).real()});
      }
      stage.push_back(std::move(tr));
    }
    f.stages.push_back(std::move(stage));
  }

  const Reader m = r.at("metrics");
  m.only({"success", "avg_flowtime_s", "low_level_nodes", "high_level_nodes", "conflicts", "ad_rad", "cd_m",
          "runtime_s", "groups"});
  auto maybe_nan = [](const Reader& v) {
    return v.raw().is_null() ? std::numeric_limits<double>::quiet_NaN() : v.real();
  };
  f.metrics.success = m.at("success").boolean();
  f.metrics.avg_flowtime_s = m.at("avg_flowtime_s").real();
  f.metrics.low_level_nodes = m.at("low_level_nodes").unsigned_integer();
  f.metrics.high_level_nodes = m.at("high_level_nodes").unsigned_integer();
  f.conflicts = m.at("conflicts").unsigned_integer();
  f.metrics.ad_rad = maybe_nan(m.at("ad_rad"));
  f.metrics.cd_m = maybe_nan(m.at("cd_m"));
  if (m.has("runtime_s")) {
    f.include_timing = true;
    f.metrics.runtime_s = m.at("runtime_s").real();
  }
  const Reader groups = m.at("groups");
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const Reader gr = groups.item(g);
    GroupMetrics gm;
    gm.stage = gr.at("stage").unsigned_integer();
    gm.group = gr.at("group").unsigned_integer();
    const Reader w = gr.at("window");
    if (w.size() != 2) w.fail("expected [first, last]");
    gm.window = {static_cast<int>(w.item(0).integer()), static_cast<int>(w.item(1).integer())};
    gm.ad_rad = gr.at("ad_rad").real();
    gm.cd_m = gr.at("cd_m").real();
    f.metrics.groups.push_back(gm);
  }

  const Reader p = r.at("provenance");
  p.only({"tool", "version", "seed", "config"});
  f.version = p.at("version").string();
  f.seed = p.at("seed").unsigned_integer();
  f.config = p.at("config").raw();
  if (!f.config.is_object()) p.at("config").fail("expected an object");
  return f;
}

inline void emit_solution(const SolutionFile& f, const std::string& path) {
  write_file(path, to_text(solution_to_json(f)));
}

inline SolutionFile load_solution(const std::string& path) {
  return solution_from_json(parse_text(read_file(path), path), path);
}

// ---- bench report ---------------------------------------------------------------

inline ojson bench_params_to_json(const BenchParams& p, std::uint64_t seed, std::size_t runs, const char* mode) {
  ojson groups = ojson::array();
  for (int n : p.group_sizes) groups.push_back(n);
  return {{"width", p.width},         {"height", p.height}, {"obstacles", p.obstacles},
          {"obstacle_radius", p.obstacle_radius}, {"group_sizes", groups}, {"outliers", p.outliers},
          {"spacing", p.spacing},     {"seed", seed},       {"runs", runs},
          {"mode", mode}};
}

inline ojson report_to_json(const SuiteReport& rep, const ojson& params, bool include_timing) {
  ojson rows = ojson::array();
  for (const SuiteRow& r : rep.rows) {
    ojson row = {{"name", r.name},
                 {"seed", r.seed},
                 {"status", to_string(r.status)},
                 {"agents", r.agents},
                 {"success", r.metrics.success},
                 {"avg_flowtime_s", r.metrics.avg_flowtime_s},
                 {"low_level_nodes", r.metrics.low_level_nodes},
                 {"high_level_nodes", r.metrics.high_level_nodes},
                 {"ad_rad", r.metrics.ad_rad},
                 {"cd_m", r.metrics.cd_m}};
    if (include_timing) row["runtime_s"] = r.metrics.runtime_s;
    rows.push_back(row);
  }
  const SuiteAggregate& a = rep.aggregate;
  ojson agg = {{"runs", a.runs},
               {"successes", a.successes},
               {"success_rate", a.success_rate},
               {"mean_flowtime_s", a.mean_flowtime_s},
               {"mean_low_level_nodes", a.mean_low_level_nodes},
               {"mean_high_level_nodes", a.mean_high_level_nodes},
               {"mean_ad_rad", a.mean_ad_rad},
               {"mean_cd_m", a.mean_cd_m}};
  if (include_timing) agg["mean_runtime_s"] = a.mean_runtime_s;
  return {{"params", params}, {"rows", rows}, {"aggregate", agg}};
}

/// Fixed-width text table of a suite report.
inline std::string report_table(const SuiteReport& rep, bool include_timing) {
  std::string out = fmt::format("{:<16} {:>6} {:>13} {:>6} {:>10} {:>10} {:>6} {:>8} {:>8}", "name", "seed", "status",
                                "agents", "flowtime", "ll_nodes", "hl", "AD", "CD");
  if (include_timing) out += fmt::format(" {:>9}", "runtime");
  out += '\n';
  for (const SuiteRow& r : rep.rows) {
    out += fmt::format("{:<16} {:>6} {:>13} {:>6} {:>10.3f} {:>10} {:>6} {:>8.4f} {:>8.4f}", r.name, r.seed,
                       to_string(r.status), r.agents, r.metrics.avg_flowtime_s, r.metrics.low_level_nodes,
                       r.metrics.high_level_nodes, r.metrics.ad_rad, r.metrics.cd_m);
    if (include_timing) out += fmt::format(" {:>9.3f}", r.metrics.runtime_s);
    out += '\n';
  }
  const SuiteAggregate& a = rep.aggregate;
  out += fmt::format("success {}/{} ({:.1f}%)  mean flowtime {:.3f} s  mean AD {:.4f} rad  mean CD {:.4f} m", a.successes,
                     a.runs, 100.0 * a.success_rate, a.mean_flowtime_s, a.mean_ad_rad, a.mean_cd_m);
  if (include_timing) out += fmt::format("  mean runtime {:.3f} s", a.mean_runtime_s);
  out += '\n';
  return out;
}

}  // namespace scmp
