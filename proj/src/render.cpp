#include "causalaf/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "causalaf/errors.hpp"

namespace causalaf {

std::string_view to_string(RenderFormat format) {
  switch (format) {
    case RenderFormat::Svg: return "svg";
    case RenderFormat::Tsv: return "tsv";
    case RenderFormat::Csv: return "csv";
  }
  return "unknown";
}

RenderFormat render_format_from_string(std::string_view name) {
  for (auto f : {RenderFormat::Svg, RenderFormat::Tsv, RenderFormat::Csv})
    if (to_string(f) == name) return f;
  throw Error(ErrorCode::UnknownFormat, "unknown render format '" + std::string(name) + "'");
}

Vec2 contact_point(const Box& a, const Box& b) {
  Vec2 sum{0.0, 0.0};
  int n = 0;
  for (const Vec2& c : a.corners())
    if (b.contains(c)) sum = sum + c, ++n;
  for (const Vec2& c : b.corners())
    if (a.contains(c)) sum = sum + c, ++n;
  if (n == 0) return (a.center + b.center) * 0.5;
  return sum * (1.0 / n);
}

namespace {

std::string num(double v) {
  if (v == 0.0) v = 0.0;  // no "-0.000"
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s = buf;
  if (s == "-0.000") s = "0.000";
  return s;
}

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* kind_color(ObjectKind k) {
  switch (k) {
    case ObjectKind::Av: return "#1f77b4";
    case ObjectKind::Vehicle: return "#d62728";
    case ObjectKind::StaticVehicle: return "#7f7f7f";
    case ObjectKind::Pedestrian: return "#2ca02c";
    case ObjectKind::TrafficLight: return "#ff7f0e";
  }
  return "#000000";
}

struct Frame {
  double xmin, xmax, ymin, ymax, scale;
  double sx(double x) const { return (x - xmin) * scale; }
  double sy(double y) const { return (ymax - y) * scale; }
  double width() const { return (xmax - xmin) * scale; }
  double height() const { return (ymax - ymin) * scale; }
};

Frame fit(const std::vector<Vec2>& pts, double margin, double target_width) {
  double xmin = std::numeric_limits<double>::infinity(), ymin = xmin;
  double xmax = -xmin, ymax = -xmin;
  for (const Vec2& p : pts) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  if (pts.empty()) xmin = ymin = -10.0, xmax = ymax = 10.0;
  xmin -= margin, xmax += margin, ymin -= margin, ymax += margin;
  const double span = std::max(xmax - xmin, 1e-6);
  return {xmin, xmax, ymin, ymax, target_width / span};
}

std::string polygon(const Frame& f, const Box& b, const char* fill, double opacity) {
  std::string pts;
  for (const Vec2& c : b.corners()) {
    if (!pts.empty()) pts += ' ';
    pts += num(f.sx(c.x)) + "," + num(f.sy(c.y));
  }
  return "<polygon points=\"" + pts + "\" fill=\"" + fill + "\" fill-opacity=\"" + num(opacity) +
         "\" stroke=\"#000000\" stroke-width=\"0.5\"/>\n";
}

std::string trace_rows(const ScenarioTrace& trace, char sep) {
  std::ostringstream os;
  const char* cols[] = {"step", "time", "object", "type", "kind", "x", "y", "heading", "speed", "min_distance"};
  for (std::size_t c = 0; c < std::size(cols); ++c) os << (c ? std::string(1, sep) : "") << cols[c];
  os << '\n';
  for (std::size_t k = 0; k < trace.states.size(); ++k) {
    const Scene& s = trace.states[k];
    const double md = k < trace.running_min.size() ? trace.running_min[k] : trace.min_distance;
    for (const auto& o : s.objects) {
      os << k << sep << num(s.time) << sep << o.id << sep << o.type << sep << to_string(o.kind) << sep << num(o.x)
         << sep << num(o.y) << sep << num(o.heading) << sep << num(o.speed) << sep
         << (std::isfinite(md) ? num(md) : std::string("inf")) << '\n';
    }
  }
  return os.str();
}

std::string trace_svg(const ScenarioTrace& trace, const RoadLayout* layout, std::optional<std::size_t> step) {
  std::vector<Vec2> pts;
  for (const auto& s : trace.states)
    for (const auto& o : s.objects)
      if (o.has_footprint())
        for (const Vec2& c : o.footprint().corners()) pts.push_back(c);
  const Frame f = fit(pts, 10.0, 800.0);

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(f.width()) << "\" height=\""
     << num(f.height() + 40.0) << "\" viewBox=\"0 0 " << num(f.width()) << " " << num(f.height() + 40.0)
     << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << num(f.width()) << "\" height=\"" << num(f.height() + 40.0)
     << "\" fill=\"#ffffff\"/>\n";

  if (layout) {
    for (const Area& a : layout->areas) {
      const double x0 = std::max(a.xmin, f.xmin), x1 = std::min(a.xmax, f.xmax);
      const double y0 = std::max(a.ymin, f.ymin), y1 = std::min(a.ymax, f.ymax);
      if (x1 <= x0 || y1 <= y0) continue;
      os << "<rect class=\"road\" x=\"" << num(f.sx(x0)) << "\" y=\"" << num(f.sy(y1)) << "\" width=\""
         << num((x1 - x0) * f.scale) << "\" height=\"" << num((y1 - y0) * f.scale) << "\" fill=\"#e8e8e8\"/>\n";
    }
    for (const Lane& l : layout->lanes) {
      std::string p;
      for (const Vec2& c : l.centerline) p += (p.empty() ? "" : " ") + num(f.sx(c.x)) + "," + num(f.sy(c.y));
      os << "<polyline class=\"lane\" points=\"" << p
         << "\" fill=\"none\" stroke=\"#bbbbbb\" stroke-dasharray=\"6,4\" stroke-width=\"1\"/>\n";
    }
    if (layout->stop_line_x) {
      const double x = f.sx(*layout->stop_line_x);
      os << "<line class=\"stop-line\" x1=\"" << num(x) << "\" y1=\"0\" x2=\"" << num(x) << "\" y2=\""
         << num(f.height()) << "\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
    }
  }

  if (trace.states.empty()) {
    os << "</svg>\n";
    return os.str();
  }

  const Scene& shown = step ? trace.states.at(*step) : trace.states.back();
  if (!step) {
    // Paths keyed by object id over all recorded states.
    std::map<int, std::pair<ObjectKind, std::string>> paths;
    for (const auto& s : trace.states)
      for (const auto& o : s.objects) {
        if (!o.has_footprint()) continue;
        auto& [kind, p] = paths[o.id];
        kind = o.kind;
        p += (p.empty() ? "" : " ") + num(f.sx(o.x)) + "," + num(f.sy(o.y));
      }
    for (const auto& [id, path] : paths)
      os << "<polyline class=\"path\" data-object=\"" << id << "\" points=\"" << path.second
         << "\" fill=\"none\" stroke=\"" << kind_color(path.first) << "\" stroke-width=\"1.5\"/>\n";
  }
  for (const auto& o : shown.objects) {
    if (o.kind == ObjectKind::TrafficLight) {
      const char* color = "#2ca02c";
      const LightPhase ph = o.light.cross_phase(shown.time);
      if (ph == LightPhase::Red) color = "#d62728";
      os << "<circle class=\"light\" cx=\"" << num(f.sx(o.x)) << "\" cy=\"" << num(f.sy(o.y))
         << "\" r=\"5\" fill=\"" << color << "\"/>\n";
      continue;
    }
    os << polygon(f, o.footprint(), kind_color(o.kind), 0.6);
    os << "<text x=\"" << num(f.sx(o.x)) << "\" y=\"" << num(f.sy(o.y) - 6.0)
       << "\" font-size=\"9\" text-anchor=\"middle\">" << escape(o.type) << o.id << "</text>\n";
  }

  if (trace.collided && !step) {
    const auto av = shown.av_index();
    const SceneObject* other = nullptr;
    for (const auto& o : shown.objects)
      if (o.id == trace.closest_object) other = &o;
    if (av && other) {
      const Vec2 c = contact_point(shown.objects[*av].footprint(), other->footprint());
      os << "<circle class=\"collision\" data-x=\"" << num(c.x) << "\" data-y=\"" << num(c.y) << "\" data-step=\""
         << trace.step_count << "\" cx=\"" << num(f.sx(c.x)) << "\" cy=\"" << num(f.sy(c.y))
         << "\" r=\"6\" fill=\"none\" stroke=\"#000000\" stroke-width=\"2\"/>\n";
    }
  }

  const std::size_t idx = step ? *step : trace.states.size() - 1;
  os << "<text x=\"8\" y=\"" << num(f.height() + 25.0) << "\" font-size=\"12\">step " << idx << "  t="
     << num(shown.time) << "s  min distance "
     << (std::isfinite(trace.min_distance) ? num(trace.min_distance) : std::string("inf"))
     << (trace.collided ? "  collision" : "") << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

const char* edge_kind_name(std::size_t k) {
  switch (k) {
    case 0: return "none";
    case 1: return "independent";
    case 2: return "directed";
  }
  return "other";
}

std::string bg_rows(const BehavioralGraph& bg, const CausalGraph& cg, char sep) {
  std::ostringstream os;
  os << "row" << sep << "i" << sep << "j" << sep << "type" << sep << "kind";
  for (std::size_t a = 0; a < bg.h2(); ++a) os << sep << "attr" << a;
  os << '\n';
  for (std::size_t i = 0; i < bg.nodes(); ++i) {
    const auto t = bg.type_of(i);
    os << "node" << sep << i << sep << i << sep << (t && *t < cg.size() ? cg.name(*t) : "?") << sep << "";
    for (std::size_t a = 0; a < bg.h2(); ++a) os << sep;
    os << '\n';
  }
  for (std::size_t i = 0; i < bg.nodes(); ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const auto k = bg.edge_type(i, j);
      if (!k) continue;
      os << "edge" << sep << i << sep << j << sep << "" << sep << edge_kind_name(*k);
      for (double v : bg.edge_attributes(i, j)) os << sep << num(v);
      os << '\n';
    }
  return os.str();
}

std::string bg_svg(const BehavioralGraph& bg, const CausalGraph& cg) {
  const std::size_t n = bg.nodes();
  const double size = 400.0, cx = 200.0, cy = 200.0, radius = n > 1 ? 140.0 : 0.0, node_r = 22.0;
  std::vector<Vec2> pos(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = -std::numbers::pi / 2.0 + 2.0 * std::numbers::pi * static_cast<double>(i) / std::max<std::size_t>(n, 1);
    pos[i] = {cx + radius * std::cos(a), cy + radius * std::sin(a)};
  }
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(size) << "\" height=\"" << num(size)
     << "\" viewBox=\"0 0 " << num(size) << " " << num(size) << "\">\n";
  os << "<defs><marker id=\"arrow\" viewBox=\"0 0 10 10\" refX=\"10\" refY=\"5\" markerWidth=\"6\" "
        "markerHeight=\"6\" orient=\"auto\"><path d=\"M0,0 L10,5 L0,10 z\" fill=\"#333333\"/></marker></defs>\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << num(size) << "\" height=\"" << num(size) << "\" fill=\"#ffffff\"/>\n";
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const auto k = bg.edge_type(i, j);
      if (!k) continue;
      if (i == j) {
        const Vec2 p = pos[i];
        os << "<path class=\"edge\" data-i=\"" << i << "\" data-j=\"" << j << "\" d=\"M" << num(p.x - 8.0) << ","
           << num(p.y - node_r + 2.0) << " C" << num(p.x - 30.0) << "," << num(p.y - node_r - 35.0) << " "
           << num(p.x + 30.0) << "," << num(p.y - node_r - 35.0) << " " << num(p.x + 8.0) << ","
           << num(p.y - node_r + 2.0) << "\" fill=\"none\" stroke=\"#333333\" marker-end=\"url(#arrow)\"/>\n";
        os << "<text x=\"" << num(p.x) << "\" y=\"" << num(p.y - node_r - 30.0)
           << "\" font-size=\"9\" text-anchor=\"middle\">" << edge_kind_name(*k) << "</text>\n";
        continue;
      }
      // Interaction (i, j): drawn from i to j.
      const Vec2 a = pos[i], b = pos[j];
      const Vec2 d = b - a;
      const double len = std::max(d.norm(), 1e-9);
      const Vec2 u = d * (1.0 / len);
      const Vec2 s = a + u * node_r, e = b - u * node_r;
      os << "<line class=\"edge\" data-i=\"" << i << "\" data-j=\"" << j << "\" x1=\"" << num(s.x) << "\" y1=\""
         << num(s.y) << "\" x2=\"" << num(e.x) << "\" y2=\"" << num(e.y)
         << "\" stroke=\"#333333\" marker-end=\"url(#arrow)\"/>\n";
      const Vec2 m = (s + e) * 0.5;
      os << "<text x=\"" << num(m.x) << "\" y=\"" << num(m.y - 3.0) << "\" font-size=\"9\" text-anchor=\"middle\">"
         << edge_kind_name(*k) << "</text>\n";
    }
  for (std::size_t i = 0; i < n; ++i) {
    const auto t = bg.type_of(i);
    const std::string label = (t && *t < cg.size() ? cg.name(*t) : std::string("?")) + std::to_string(i);
    os << "<circle class=\"node\" data-i=\"" << i << "\" cx=\"" << num(pos[i].x) << "\" cy=\"" << num(pos[i].y)
       << "\" r=\"" << num(node_r) << "\" fill=\"#dbe9f6\" stroke=\"#1f77b4\"/>\n";
    os << "<text x=\"" << num(pos[i].x) << "\" y=\"" << num(pos[i].y + 4.0)
       << "\" font-size=\"12\" text-anchor=\"middle\">" << escape(label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace

std::string render_trace(const ScenarioTrace& trace, RenderFormat format, const RoadLayout* layout,
                         std::optional<std::size_t> step) {
  if (step && *step >= trace.states.size())
    throw Error(ErrorCode::IndexOutOfRange, "trace has " + std::to_string(trace.states.size()) + " states");
  switch (format) {
    case RenderFormat::Svg: return trace_svg(trace, layout, step);
    case RenderFormat::Tsv: return trace_rows(trace, '\t');
    case RenderFormat::Csv: return trace_rows(trace, ',');
  }
  throw Error(ErrorCode::UnknownFormat, "unsupported trace format");
}

std::string render_bg(const BehavioralGraph& bg, const CausalGraph& cg, RenderFormat format) {
  switch (format) {
    case RenderFormat::Svg: return bg_svg(bg, cg);
    case RenderFormat::Tsv: return bg_rows(bg, cg, '\t');
    case RenderFormat::Csv: return bg_rows(bg, cg, ',');
  }
  throw Error(ErrorCode::UnknownFormat, "unsupported graph format");
}

std::string line_plot_svg(const std::vector<Series>& series, std::string_view title, std::string_view x_label,
                          std::string_view y_label) {
  const double w = 640.0, h = 400.0, left = 60.0, right = 150.0, top = 30.0, bottom = 45.0;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const auto& s : series)
    for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
      xmin = std::min(xmin, s.x[k]);
      xmax = std::max(xmax, s.x[k]);
      ymin = std::min(ymin, s.y[k]);
      ymax = std::max(ymax, s.y[k]);
    }
  if (!std::isfinite(xmin)) xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ymax <= ymin) ymax = ymin + 1.0;
  const double pw = w - left - right, ph = h - top - bottom;
  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return top + (ymax - y) / (ymax - ymin) * ph; };
  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w) << "\" height=\"" << num(h)
     << "\" viewBox=\"0 0 " << num(w) << " " << num(h) << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << num(w) << "\" height=\"" << num(h) << "\" fill=\"#ffffff\"/>\n";
  os << "<text x=\"" << num(left) << "\" y=\"18\" font-size=\"13\">" << escape(title) << "</text>\n";
  os << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
     << "\" fill=\"none\" stroke=\"#000000\"/>\n";
  os << "<text x=\"" << num(left) << "\" y=\"" << num(h - 25.0) << "\" font-size=\"10\">" << num(xmin) << "</text>\n";
  os << "<text x=\"" << num(left + pw) << "\" y=\"" << num(h - 25.0) << "\" font-size=\"10\" text-anchor=\"end\">"
     << num(xmax) << "</text>\n";
  os << "<text x=\"" << num(left + pw / 2.0) << "\" y=\"" << num(h - 8.0)
     << "\" font-size=\"11\" text-anchor=\"middle\">" << escape(x_label) << "</text>\n";
  os << "<text x=\"" << num(left - 5.0) << "\" y=\"" << num(top + ph) << "\" font-size=\"10\" text-anchor=\"end\">"
     << num(ymin) << "</text>\n";
  os << "<text x=\"" << num(left - 5.0) << "\" y=\"" << num(top + 10.0) << "\" font-size=\"10\" text-anchor=\"end\">"
     << num(ymax) << "</text>\n";
  os << "<text x=\"14\" y=\"" << num(top + ph / 2.0) << "\" font-size=\"11\" transform=\"rotate(-90 14 "
     << num(top + ph / 2.0) << ")\" text-anchor=\"middle\">" << escape(y_label) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = palette[k % std::size(palette)];
    std::string pts;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      pts += (pts.empty() ? "" : " ") + num(px(s.x[i])) + "," + num(py(s.y[i]));
    }
    os << "<polyline class=\"series\" points=\"" << pts << "\" fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"1.5\"/>\n";
    const double ly = top + 14.0 * static_cast<double>(k) + 10.0;
    os << "<line x1=\"" << num(w - right + 10.0) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(w - right + 28.0)
       << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << num(w - right + 32.0) << "\" y=\"" << num(ly + 4.0) << "\" font-size=\"10\">"
       << escape(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace causalaf
