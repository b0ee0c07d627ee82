#include <filesystem>
#include <fstream>

#include "causalaf/errors.hpp"
#include "causalaf/simulator.hpp"

namespace causalaf {

namespace {

constexpr double kLaneWidth = 3.5;
constexpr double kCarLength = 4.5, kCarWidth = 2.0;
constexpr double kWalkerSize = 0.8;

TypeRole role(ObjectKind kind, Range x, Range y, Range vx, Range vy) {
  TypeRole r;
  r.kind = kind;
  r.bounds = {x, y, vx, vy};
  if (kind == ObjectKind::Pedestrian) {
    r.length = kWalkerSize;
    r.width = kWalkerSize;
  } else if (kind == ObjectKind::TrafficLight) {
    r.length = 0.0;
    r.width = 0.0;
  } else {
    r.length = kCarLength;
    r.width = kCarWidth;
  }
  return r;
}

Lane straight_lane(Vec2 a, Vec2 b) { return {{a, b}, kLaneWidth}; }

ScenarioSpec traffic_light(int irrelevant) {
  ScenarioSpec s;
  s.name = "traffic-light";
  s.cg = CausalGraph::build({{"T", {}},
                             {"A", {"T"}},
                             {"R", {"T"}},
                             {"I", {}, true, irrelevant},
                             {"C", {"A", "R"}, false}});
  // East-west road crossed by a north-south road at the origin. The AV drives
  // east; R drives north and keeps going through the red.
  s.layout.lanes = {straight_lane({-150, -1.75}, {60, -1.75}), straight_lane({60, 1.75}, {-150, 1.75}),
                    straight_lane({1.75, -100}, {1.75, 100}), straight_lane({-1.75, 100}, {-1.75, -100})};
  s.layout.areas = {{-150, 60, -3.5, 3.5}, {-3.5, 3.5, -100, 100}};
  s.layout.stop_line_x = -3.5;
  s.layout.light_position = {-4.5, -4.5};
  s.roles["T"] = role(ObjectKind::TrafficLight, {0.0, 2.0}, {}, {}, {});
  s.roles["A"] = role(ObjectKind::Av, {-60, -25}, {-1.75, -1.75}, {8, 16}, {0, 0});
  s.roles["R"] = role(ObjectKind::Vehicle, {1.75, 1.75}, {-70, -15}, {0, 0}, {8, 16});
  s.roles["I"] = role(ObjectKind::Vehicle, {-140, -100}, {1.75, 1.75}, {-14, -6}, {0, 0});
  s.max_step = 5;
  s.light_yellow = 1.0;
  s.av_route = Route::Straight;
  return s;
}

ScenarioSpec pedestrian(int irrelevant) {
  ScenarioSpec s;
  s.name = "pedestrian";
  s.cg = CausalGraph::build({{"A", {"S"}},
                             {"S", {}},
                             {"P", {}},
                             {"I", {}, true, irrelevant},
                             {"C", {"A", "P"}, false}});
  // Two-lane road; S parks on the shoulder south of the AV lane and P walks
  // north from the sidewalk across it.
  s.layout.lanes = {straight_lane({-150, 0}, {150, 0}), straight_lane({150, kLaneWidth}, {-150, kLaneWidth})};
  s.layout.areas = {{-150, 150, -8.0, 5.25}};
  s.roles["A"] = role(ObjectKind::Av, {0, 10}, {0, 0}, {8, 14}, {0, 0});
  s.roles["S"] = role(ObjectKind::StaticVehicle, {25, 45}, {-3.6, -3.0}, {0, 0}, {0, 0});
  s.roles["P"] = role(ObjectKind::Pedestrian, {28, 48}, {-7.0, -4.5}, {0, 0}, {1, 3});
  s.roles["I"] = role(ObjectKind::Vehicle, {-120, -80}, {kLaneWidth, kLaneWidth}, {-12, -6}, {0, 0});
  s.max_step = 15;
  s.av_route = Route::Straight;
  return s;
}

ScenarioSpec lane_changing(int irrelevant) {
  ScenarioSpec s;
  s.name = "lane-changing";
  s.cg = CausalGraph::build({{"A", {"S"}},
                             {"R", {}},
                             {"S", {}},
                             {"I", {}, true, irrelevant},
                             {"C", {"A", "R"}, false}});
  // S blocks the AV lane; passing means borrowing the oncoming lane where R
  // drives west.
  s.layout.lanes = {straight_lane({-150, 0}, {450, 0}), straight_lane({450, kLaneWidth}, {-150, kLaneWidth})};
  s.layout.areas = {{-150, 450, -1.75, 5.25}};
  s.roles["A"] = role(ObjectKind::Av, {0, 10}, {0, 0}, {8, 14}, {0, 0});
  s.roles["R"] = role(ObjectKind::Vehicle, {60, 300}, {kLaneWidth, kLaneWidth}, {-14, -6}, {0, 0});
  s.roles["S"] = role(ObjectKind::StaticVehicle, {25, 45}, {-0.3, 0.3}, {0, 0}, {0, 0});
  s.roles["I"] = role(ObjectKind::Vehicle, {-140, -100}, {kLaneWidth, kLaneWidth}, {-14, -6}, {0, 0});
  s.max_step = 30;
  s.av_route = Route::LaneChange;
  s.passing_lane_y = kLaneWidth;
  s.lane_change_gap = {4.0, 12.0};
  return s;
}

}  // namespace

std::vector<std::string> builtin_scenario_names() { return {"traffic-light", "pedestrian", "lane-changing"}; }

ScenarioSpec builtin_scenario(const std::string& name, int irrelevant) {
  if (irrelevant < 0) throw Error(ErrorCode::InvalidConfig, "irrelevant object count must be >= 0");
  if (name == "traffic-light") return traffic_light(irrelevant);
  if (name == "pedestrian") return pedestrian(irrelevant);
  if (name == "lane-changing") return lane_changing(irrelevant);
  throw Error(ErrorCode::InvalidConfig, "unknown scenario '" + name + "'");
}

// ---------------------------------------------------------------------------
// Spec files

void to_json(nlohmann::json& j, const Range& r) { j = nlohmann::json::array({r.lo, r.hi}); }
void from_json(const nlohmann::json& j, Range& r) {
  r.lo = j.at(0).get<double>();
  r.hi = j.at(1).get<double>();
}

void to_json(nlohmann::json& j, const Vec2& v) { j = nlohmann::json::array({v.x, v.y}); }
void from_json(const nlohmann::json& j, Vec2& v) {
  v.x = j.at(0).get<double>();
  v.y = j.at(1).get<double>();
}

namespace {

template <class T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

std::string route_name(Route r) { return r == Route::LaneChange ? "lane-change" : "straight"; }
Route route_from(const std::string& s) {
  if (s == "straight") return Route::Straight;
  if (s == "lane-change") return Route::LaneChange;
  throw Error(ErrorCode::ParseError, "unknown route '" + s + "'");
}

}  // namespace

nlohmann::json to_json(const ScenarioSpec& spec) {
  using nlohmann::json;
  json lanes = json::array();
  for (const auto& l : spec.layout.lanes) lanes.push_back({{"centerline", l.centerline}, {"width", l.width}});
  json areas = json::array();
  for (const auto& a : spec.layout.areas) areas.push_back({a.xmin, a.xmax, a.ymin, a.ymax});
  json layout = {{"lanes", lanes}, {"areas", areas}, {"light_position", spec.layout.light_position}};
  if (spec.layout.stop_line_x) layout["stop_line_x"] = *spec.layout.stop_line_x;

  json roles = json::object();
  for (const auto& [name, r] : spec.roles)
    roles[name] = {{"kind", to_string(r.kind)},
                   {"x", r.bounds[0]},
                   {"y", r.bounds[1]},
                   {"vx", r.bounds[2]},
                   {"vy", r.bounds[3]},
                   {"length", r.length},
                   {"width", r.width}};
  const AvParams& p = spec.av;
  return {{"format", "causalaf-scenario"},
          {"version", 1},
          {"name", spec.name},
          {"causal_graph", to_json(spec.cg)},
          {"layout", layout},
          {"roles", roles},
          {"max_step", spec.max_step},
          {"substeps", spec.substeps},
          {"dt", spec.dt},
          {"epsilon", spec.epsilon},
          {"attribute_scale", spec.attribute_scale},
          {"directed_offset", spec.directed_offset},
          {"lane_change_gap", spec.lane_change_gap},
          {"radar", {{"range", spec.radar.range}, {"rays", spec.radar.rays}, {"fov", spec.radar.fov}}},
          {"av",
           {{"route", route_name(spec.av_route)},
            {"passing_lane_y", spec.passing_lane_y},
            {"a_max", p.a_max},
            {"cruise_accel", p.cruise_accel},
            {"comfort_decel", p.comfort_decel},
            {"brake_range", p.brake_range},
            {"brake_cone", p.brake_cone},
            {"lane_half_width", p.lane_half_width},
            {"standoff", p.standoff},
            {"pass_clearance", p.pass_clearance},
            {"lateral_gain", p.lateral_gain},
            {"max_heading", p.max_heading},
            {"heading_time", p.heading_time},
            {"max_yaw_rate", p.max_yaw_rate},
            {"clear_margin", p.clear_margin}}},
          {"light", {{"yellow", spec.light_yellow}, {"all_red", spec.light_all_red}}}};
}

ScenarioSpec scenario_spec_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format") != "causalaf-scenario" || doc.at("version") != 1)
      throw Error(ErrorCode::ParseError, "not a version-1 scenario spec");
    ScenarioSpec s;
    s.name = doc.at("name").get<std::string>();
    s.cg = causal_graph_from_json(doc.at("causal_graph"));
    if (doc.contains("layout")) {
      const auto& l = doc["layout"];
      if (l.contains("lanes"))
        for (const auto& lane : l["lanes"])
          s.layout.lanes.push_back({lane.at("centerline").get<std::vector<Vec2>>(), lane.value("width", kLaneWidth)});
      if (l.contains("areas"))
        for (const auto& a : l["areas"])
          s.layout.areas.push_back({a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>(),
                                    a.at(3).get<double>()});
      if (l.contains("stop_line_x")) s.layout.stop_line_x = l["stop_line_x"].get<double>();
      read_opt(l, "light_position", s.layout.light_position);
    }
    for (const auto& [name, r] : doc.at("roles").items()) {
      TypeRole role;
      role.kind = object_kind_from_string(r.at("kind").get<std::string>());
      const char* keys[4] = {"x", "y", "vx", "vy"};
      for (int k = 0; k < 4; ++k) read_opt(r, keys[k], role.bounds[static_cast<std::size_t>(k)]);
      read_opt(r, "length", role.length);
      read_opt(r, "width", role.width);
      if (role.kind != ObjectKind::TrafficLight && !(role.length > 0.0 && role.width > 0.0))
        throw Error(ErrorCode::ParseError, "role " + name + " needs a positive footprint");
      if (!s.cg.find(name)) throw Error(ErrorCode::UnknownType, "role " + name + " is not a causal type");
      s.roles[name] = role;
    }
    read_opt(doc, "max_step", s.max_step);
    read_opt(doc, "substeps", s.substeps);
    read_opt(doc, "dt", s.dt);
    read_opt(doc, "epsilon", s.epsilon);
    read_opt(doc, "attribute_scale", s.attribute_scale);
    read_opt(doc, "directed_offset", s.directed_offset);
    read_opt(doc, "lane_change_gap", s.lane_change_gap);
    if (doc.contains("radar")) {
      const auto& r = doc["radar"];
      read_opt(r, "range", s.radar.range);
      read_opt(r, "rays", s.radar.rays);
      read_opt(r, "fov", s.radar.fov);
    }
    if (doc.contains("av")) {
      const auto& a = doc["av"];
      if (a.contains("route")) s.av_route = route_from(a["route"].get<std::string>());
      read_opt(a, "passing_lane_y", s.passing_lane_y);
      read_opt(a, "a_max", s.av.a_max);
      read_opt(a, "cruise_accel", s.av.cruise_accel);
      read_opt(a, "comfort_decel", s.av.comfort_decel);
      read_opt(a, "brake_range", s.av.brake_range);
      read_opt(a, "brake_cone", s.av.brake_cone);
      read_opt(a, "lane_half_width", s.av.lane_half_width);
      read_opt(a, "standoff", s.av.standoff);
      read_opt(a, "pass_clearance", s.av.pass_clearance);
      read_opt(a, "lateral_gain", s.av.lateral_gain);
      read_opt(a, "max_heading", s.av.max_heading);
      read_opt(a, "heading_time", s.av.heading_time);
      read_opt(a, "max_yaw_rate", s.av.max_yaw_rate);
      read_opt(a, "clear_margin", s.av.clear_margin);
    }
    if (doc.contains("light")) {
      read_opt(doc["light"], "yellow", s.light_yellow);
      read_opt(doc["light"], "all_red", s.light_all_red);
    }
    if (!(s.dt > 0.0) || s.max_step < 0 || s.substeps < 1 || !(s.epsilon > 0.0))
      throw Error(ErrorCode::InvalidConfig, "scenario timing or epsilon out of range");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("scenario spec: ") + e.what());
  }
}

ScenarioSpec load_scenario(const std::string& name_or_path, int irrelevant) {
  for (const auto& n : builtin_scenario_names())
    if (n == name_or_path) return builtin_scenario(n, irrelevant);
  if (!std::filesystem::exists(name_or_path))
    throw Error(ErrorCode::InvalidConfig, "no builtin scenario or spec file named '" + name_or_path + "'");
  std::ifstream in(name_or_path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("scenario spec: ") + e.what());
  }
  ScenarioSpec s = scenario_spec_from_json(doc);
  if (irrelevant != 1 && s.cg.find(kIrrelevantType)) s.cg = s.cg.with_multiplicity(kIrrelevantType, irrelevant);
  return s;
}

}  // namespace causalaf
