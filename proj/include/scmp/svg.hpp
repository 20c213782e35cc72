#pragma once

// Static SVG plot of a run: obstacles, one path polyline per agent and body
// snapshots at chosen samples, coloured by group.

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "scmp/conflict_tree.hpp"

namespace scmp {

struct SvgOptions {
  std::vector<int> snapshot_steps;  // sample indices; empty = {0, middle, end} per agent
  double pixels_per_metre = 4.0;
};

/// Colour class per agent: group index, or groups.size() for outliers.
inline std::vector<std::size_t> color_classes(const Stage& stage, std::size_t agents) {
  std::vector<std::size_t> cls(agents, stage.groups.size());
  for (std::size_t g = 0; g < stage.groups.size(); ++g)
    for (AgentId a : stage.groups[g].members) cls[a] = g;
  return cls;
}

inline std::string render_svg(const World& world, const AgentSpec& spec, const Stage& stage,
                              std::span<const Trajectory> solution, const SvgOptions& opt = {}) {
  static constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                             "#17becf", "#e377c2", "#8c564b", "#bcbd22"};
  constexpr const char* kOutlier = "#555555";
  const double s = opt.pixels_per_metre;
  const double w = (world.x_max() - world.x_min()) * s;
  const double h = (world.y_max() - world.y_min()) * s;
  auto px = [&](double x) { return (x - world.x_min()) * s; };
  auto py = [&](double y) { return (world.y_max() - y) * s; };
  const std::vector<std::size_t> cls = color_classes(stage, solution.size());
  auto color = [&](std::size_t c) {
    return c == stage.groups.size() ? std::string(kOutlier) : std::string(kPalette[c % std::size(kPalette)]);
  };

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.1f}\" height=\"{:.1f}\" viewBox=\"0 0 {:.1f} {:.1f}\">\n",
      w, h, w, h);
  out += fmt::format("<rect class=\"map\" x=\"0\" y=\"0\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"#ffffff\" "
                     "stroke=\"#000000\"/>\n",
                     w, h);
  if (world.band_expansion > 0.0)
    out += fmt::format("<rect class=\"core\" x=\"0\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"#f4f4f4\"/>\n",
                       py(world.height), w, world.height * s);

  for (const Obstacle& o : world.obstacles) {
    if (const Circle* c = std::get_if<Circle>(&o.shape)) {
      out += fmt::format("<circle class=\"obstacle\" cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"{:.2f}\" fill=\"#333333\"/>\n",
                         px(c->center.x), py(c->center.y), c->radius * s);
    } else {
      std::string pts;
      for (Vec2 v : std::get<Polygon4>(o.shape).corners) pts += fmt::format("{:.2f},{:.2f} ", px(v.x), py(v.y));
      pts.pop_back();
      out += fmt::format("<polygon class=\"obstacle\" points=\"{}\" fill=\"#333333\"/>\n", pts);
    }
  }

  for (std::size_t a = 0; a < solution.size(); ++a) {
    const Trajectory& tr = solution[a];
    if (tr.states.empty()) continue;
    const std::string col = color(cls[a]);
    std::string pts;
    for (const AgentState& st : tr.states) pts += fmt::format("{:.2f},{:.2f} ", px(st.x), py(st.y));
    pts.pop_back();
    out += fmt::format("<polyline class=\"path c{}\" data-agent=\"{}\" points=\"{}\" fill=\"none\" stroke=\"{}\" "
                       "stroke-width=\"1.5\"/>\n",
                       cls[a], a, pts, col);

    std::vector<int> steps = opt.snapshot_steps;
    if (steps.empty()) steps = {0, tr.arrival_step() / 2, tr.arrival_step()};
    for (int t : steps) {
      const OrientedRectangle fp = footprint(tr.pose_at(t), spec);
      std::string poly;
      for (Vec2 v : fp.corners) poly += fmt::format("{:.2f},{:.2f} ", px(v.x), py(v.y));
      poly.pop_back();
      out += fmt::format("<polygon class=\"footprint c{}\" data-agent=\"{}\" data-t=\"{}\" points=\"{}\" "
                         "fill=\"{}\" fill-opacity=\"0.35\" stroke=\"{}\"/>\n",
                         cls[a], a, t, poly, col, col);
    }
  }
  out += "</svg>\n";
  return out;
}

}  // namespace scmp
