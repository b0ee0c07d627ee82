#pragma once

// Deterministic 2D traffic simulator. A behavioral graph is decoded into
// objects, the AV drives under a rule-based policy fed by an occluding radar,
// and the trace reports the minimal footprint distance between the AV and
// everything else.

#include <array>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "causalaf/geometry.hpp"
#include "causalaf/scenario_graph.hpp"

namespace causalaf {

enum class ObjectKind { Av, Vehicle, StaticVehicle, Pedestrian, TrafficLight };

std::string_view to_string(ObjectKind kind);
ObjectKind object_kind_from_string(std::string_view name);

enum class LightPhase { Green, Yellow, Red };
std::string_view to_string(LightPhase phase);

/// The main approach is green until `switch_time`, yellow for `yellow`
/// seconds, then red. The cross approach (the AV's) turns green `all_red`
/// seconds after the main approach goes red.
struct LightSchedule {
  double switch_time = 1.0;
  double yellow = 0.5;
  double all_red = 0.0;

  LightPhase main_phase(double t) const;
  LightPhase cross_phase(double t) const;
  friend bool operator==(const LightSchedule&, const LightSchedule&) = default;
};

enum class Route { Straight, LaneChange };
enum class LanePhase { Keep, Change, Pass, Return, Done };

/// Mutable state of the AV's scripted route.
struct AvBehavior {
  Route route = Route::Straight;
  LanePhase phase = LanePhase::Keep;
  double lane_y = 0.0;          // lane the AV starts in
  double passing_y = 3.5;       // lane used to pass a static obstacle
  double target_y = 0.0;        // lane currently tracked
  double target_speed = 10.0;
  double lane_change_gap = 8.0;  // distance to the static obstacle that triggers the maneuver
  double pass_x = 0.0;          // x after which the AV may return
  friend bool operator==(const AvBehavior&, const AvBehavior&) = default;
};

struct SceneObject {
  int id = 0;
  std::size_t node = 0;  // BG node index
  std::string type;
  ObjectKind kind = ObjectKind::Vehicle;
  double x = 0.0, y = 0.0, heading = 0.0;
  double speed = 0.0;
  double length = 4.5, width = 2.0;
  AvBehavior av;
  LightSchedule light;

  Vec2 position() const { return {x, y}; }
  Vec2 velocity() const { return unit(heading) * speed; }
  Box footprint() const { return {{x, y}, heading, length, width}; }
  bool has_footprint() const { return kind != ObjectKind::TrafficLight; }
  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

struct Scene {
  double time = 0.0;
  std::vector<SceneObject> objects;

  /// Index of the AV, or nullopt.
  std::optional<std::size_t> av_index() const;
  const SceneObject* light() const;
  friend bool operator==(const Scene&, const Scene&) = default;
};

struct Detection {
  double range = 0.0;
  double bearing = 0.0;  // relative to the agent heading
  int object_id = 0;
  ObjectKind kind = ObjectKind::Vehicle;
  Vec2 point;  // world-frame hit point
  friend bool operator==(const Detection&, const Detection&) = default;
};

struct RadarConfig {
  double range = 40.0;
  int rays = 64;
  double fov = 2.0 * std::numbers::pi / 3.0;
  friend bool operator==(const RadarConfig&, const RadarConfig&) = default;
};

struct Action {
  double accel = 0.0;     // m/s^2
  double yaw_rate = 0.0;  // rad/s
  friend bool operator==(const Action&, const Action&) = default;
};

struct AvParams {
  double a_max = 6.0;
  double cruise_accel = 2.0;
  double comfort_decel = 3.0;
  double brake_range = 20.0;
  double brake_cone = 2.0 * std::numbers::pi / 3.0;  // full width
  double lane_half_width = 1.75;
  double standoff = 3.0;          // stop distance kept behind a static obstacle
  double pass_clearance = 8.0;    // beyond the obstacle's near face before returning
  double lateral_gain = 0.3;      // desired heading per metre of lateral error
  double max_heading = 0.35;
  double heading_time = 0.5;      // s to close a heading error
  double max_yaw_rate = 0.6;
  double clear_margin = 2.5;      // half band of the target lane checked for traffic
  friend bool operator==(const AvParams&, const AvParams&) = default;
};

struct AvInput {
  const SceneObject* ego = nullptr;
  std::vector<Detection> detections;
  LightPhase light = LightPhase::Green;
  std::optional<double> stop_line_x;
};

struct AvDecision {
  Action action;
  AvBehavior behavior;
  bool emergency = false;
};

struct Range {
  double lo = 0.0, hi = 0.0;
  friend bool operator==(const Range&, const Range&) = default;
};

/// How a causal type is instantiated. `bounds` map the four self-loop
/// attributes (x, y, vx, vy); a traffic light reads its switch time from the
/// first attribute instead.
struct TypeRole {
  ObjectKind kind = ObjectKind::Vehicle;
  std::array<Range, 4> bounds{};
  double length = 4.5, width = 2.0;
  friend bool operator==(const TypeRole&, const TypeRole&) = default;
};

struct Lane {
  std::vector<Vec2> centerline;
  double width = 3.5;
  friend bool operator==(const Lane&, const Lane&) = default;
};

/// Axis-aligned region where objects may be placed.
struct Area {
  double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;
  bool contains(Vec2 p) const { return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax; }
  friend bool operator==(const Area&, const Area&) = default;
};

struct RoadLayout {
  std::vector<Lane> lanes;
  std::vector<Area> areas;
  std::optional<double> stop_line_x;  // AV stop line when a light is present
  Vec2 light_position;
  friend bool operator==(const RoadLayout&, const RoadLayout&) = default;
};

struct ScenarioSpec {
  std::string name;
  RoadLayout layout;
  CausalGraph cg;
  std::map<std::string, TypeRole> roles;  // physical types only
  int max_step = 5;
  int substeps = 10;  // simulator ticks per decision step
  double dt = 0.1;
  double epsilon = 0.5;
  double attribute_scale = 2.0;  // flow output scale fed to the bounded squash
  Range directed_offset{-10.0, 10.0};  // aim point offset along the target's lane
  Range lane_change_gap{4.0, 16.0};
  RadarConfig radar;
  AvParams av;
  Route av_route = Route::Straight;
  double passing_lane_y = 3.5;
  double light_yellow = 0.5;
  double light_all_red = 0.0;
  friend bool operator==(const ScenarioSpec&, const ScenarioSpec&) = default;
};

struct ScenarioTrace {
  std::vector<Scene> states;  // states[k] after k decision steps
  double dt = 0.1;
  int substeps = 10;
  int step_count = 0;
  double min_distance = std::numeric_limits<double>::infinity();
  bool collided = false;
  std::vector<double> running_min;  // per recorded state
  int closest_object = -1;
  std::vector<std::string> warnings;
};

/// Maps an unbounded flow output into [r.lo, r.hi] through a logistic squash.
double decode_attribute(double value, Range r, double scale);
/// Inverse of decode_attribute for values strictly inside the range.
double encode_attribute(double physical, Range r, double scale);

/// One object per physical node. Out-of-layout positions are clamped into the
/// nearest area with a warning, or rejected with UnplaceableObject in strict mode.
std::vector<SceneObject> instantiate(const BehavioralGraph& bg, const ScenarioSpec& spec, bool strict = false,
                                     std::vector<std::string>* warnings = nullptr);

/// Casts `radar.rays` rays over the field of view centred on the agent
/// heading. Each ray reports only the nearest footprint it meets.
std::vector<Detection> radar_scan(const Scene& scene, std::size_t agent, const RadarConfig& radar);

AvDecision av_policy(const AvInput& input, const AvParams& params);

/// Advances every object by one tick: exact constant-acceleration speed update
/// (clamped at standstill), heading from the yaw rate, then position.
/// `actions` is indexed like scene.objects; missing entries mean no action.
Scene step(const Scene& scene, const std::vector<Action>& actions, double dt);

/// Footprint distance from the AV to the nearest other object.
double av_clearance(const Scene& scene, int* closest = nullptr);

/// Replaces the AV's action each tick. Receives the sensed input, the rule
/// policy's decision (whose route state is kept) and the tick index.
using AvOverride = std::function<Action(const AvInput&, const AvDecision&, int)>;

ScenarioTrace execute(const BehavioralGraph& bg, const ScenarioSpec& spec, bool strict = false,
                      const AvOverride& override_av = {});
/// Runs an already instantiated scene.
ScenarioTrace execute_scene(Scene scene, const ScenarioSpec& spec, const AvOverride& override_av = {});

/// 1 iff min_distance < epsilon.
int objective(const ScenarioTrace& trace, double epsilon);

/// Built-in specs: "traffic-light", "pedestrian", "lane-changing".
/// `irrelevant` sets the multiplicity cap of the irrelevant type I.
ScenarioSpec builtin_scenario(const std::string& name, int irrelevant = 1);
std::vector<std::string> builtin_scenario_names();

nlohmann::json to_json(const ScenarioSpec& spec);
ScenarioSpec scenario_spec_from_json(const nlohmann::json& doc);
/// A builtin name or a path to a spec file.
ScenarioSpec load_scenario(const std::string& name_or_path, int irrelevant = 1);

}  // namespace causalaf
