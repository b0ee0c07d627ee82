#pragma once

// Deterministic text renderings of traces, behavioral graphs and curves.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "causalaf/scenario_graph.hpp"
#include "causalaf/simulator.hpp"

namespace causalaf {

enum class RenderFormat { Svg, Tsv, Csv };
std::string_view to_string(RenderFormat format);
/// "svg", "tsv" or "csv"; anything else throws UnknownFormat.
RenderFormat render_format_from_string(std::string_view name);

/// Where two footprints touch: the mean of the corners of either box that lie
/// in the other, or the midpoint of the centres when none do.
Vec2 contact_point(const Box& a, const Box& b);

/// SVG: top-down plot of every object's path over the recorded states with
/// the final footprints, or a snapshot of one state when `step` is given.
/// A collision is marked at the contact point of the AV and the closest
/// object. TSV/CSV: one row per object per recorded state.
std::string render_trace(const ScenarioTrace& trace, RenderFormat format, const RoadLayout* layout = nullptr,
                         std::optional<std::size_t> step = std::nullopt);

/// SVG: labeled directed graph with nodes on a circle. TSV/CSV: node rows
/// followed by edge rows.
std::string render_bg(const BehavioralGraph& bg, const CausalGraph& cg, RenderFormat format);

struct Series {
  std::string label;
  std::vector<double> x, y;
};

std::string line_plot_svg(const std::vector<Series>& series, std::string_view title, std::string_view x_label,
                          std::string_view y_label);

}  // namespace causalaf
