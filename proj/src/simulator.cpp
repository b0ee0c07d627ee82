#include "causalaf/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "causalaf/errors.hpp"

namespace causalaf {

std::string_view to_string(ObjectKind kind) {
  switch (kind) {
    case ObjectKind::Av: return "av";
    case ObjectKind::Vehicle: return "vehicle";
    case ObjectKind::StaticVehicle: return "static_vehicle";
    case ObjectKind::Pedestrian: return "pedestrian";
    case ObjectKind::TrafficLight: return "traffic_light";
  }
  return "unknown";
}

ObjectKind object_kind_from_string(std::string_view name) {
  for (auto k : {ObjectKind::Av, ObjectKind::Vehicle, ObjectKind::StaticVehicle, ObjectKind::Pedestrian,
                 ObjectKind::TrafficLight})
    if (to_string(k) == name) return k;
  throw Error(ErrorCode::ParseError, "unknown object kind '" + std::string(name) + "'");
}

std::string_view to_string(LightPhase phase) {
  switch (phase) {
    case LightPhase::Green: return "green";
    case LightPhase::Yellow: return "yellow";
    case LightPhase::Red: return "red";
  }
  return "unknown";
}

LightPhase LightSchedule::main_phase(double t) const {
  if (t < switch_time) return LightPhase::Green;
  if (t < switch_time + yellow) return LightPhase::Yellow;
  return LightPhase::Red;
}

LightPhase LightSchedule::cross_phase(double t) const {
  return t < switch_time + yellow + all_red ? LightPhase::Red : LightPhase::Green;
}

std::optional<std::size_t> Scene::av_index() const {
  for (std::size_t k = 0; k < objects.size(); ++k)
    if (objects[k].kind == ObjectKind::Av) return k;
  return std::nullopt;
}

const SceneObject* Scene::light() const {
  for (const auto& o : objects)
    if (o.kind == ObjectKind::TrafficLight) return &o;
  return nullptr;
}

double decode_attribute(double value, Range r, double scale) {
  if (!(r.hi > r.lo)) return r.lo;
  return r.lo + (r.hi - r.lo) / (1.0 + std::exp(-value / scale));
}

double encode_attribute(double physical, Range r, double scale) {
  if (!(r.hi > r.lo)) return 0.0;
  const double p = std::clamp((physical - r.lo) / (r.hi - r.lo), 1e-12, 1.0 - 1e-12);
  return scale * std::log(p / (1.0 - p));
}

// ---------------------------------------------------------------------------
// Instantiation

namespace {

std::array<double, 4> self_attributes(const BehavioralGraph& bg, std::size_t i) {
  std::array<double, 4> a{};
  auto e = bg.edge(i, i);
  for (std::size_t k = 0; k < std::min<std::size_t>(4, bg.h2()); ++k) a[k] = e[bg.h1() + k];
  return a;
}

double edge_attribute0(const BehavioralGraph& bg, std::size_t i, std::size_t j) {
  return bg.h2() > 0 ? bg.edge(i, j)[bg.h1()] : 0.0;
}

void place(SceneObject& o, const RoadLayout& layout, bool strict, std::vector<std::string>* warnings) {
  if (layout.areas.empty()) return;
  const Vec2 p = o.position();
  for (const auto& a : layout.areas)
    if (a.contains(p)) return;
  if (strict)
    throw Error(ErrorCode::UnplaceableObject,
                "object " + std::to_string(o.id) + " (" + o.type + ") lies outside the road layout");
  double best = std::numeric_limits<double>::infinity();
  Vec2 target = p;
  for (const auto& a : layout.areas) {
    const Vec2 q{std::clamp(p.x, a.xmin, a.xmax), std::clamp(p.y, a.ymin, a.ymax)};
    const double d = (q - p).norm();
    if (d < best) {
      best = d;
      target = q;
    }
  }
  o.x = target.x;
  o.y = target.y;
  if (warnings)
    warnings->push_back("object " + std::to_string(o.id) + " (" + o.type + ") clamped into the road layout");
}

}  // namespace

std::vector<SceneObject> instantiate(const BehavioralGraph& bg, const ScenarioSpec& spec, bool strict,
                                     std::vector<std::string>* warnings) {
  const CausalGraph& cg = spec.cg;
  if (bg.n() != cg.size()) throw Error(ErrorCode::ShapeMismatch, "graph type width differs from the scenario");
  const double s = spec.attribute_scale;
  std::vector<SceneObject> objects;
  std::vector<int> object_of(bg.nodes(), -1);
  TypeCounts placed(cg.size(), 0);
  bool have_av = false;

  for (std::size_t i = 0; i < bg.nodes(); ++i) {
    const auto t = bg.type_of(i);
    if (!t || !cg.physical(*t)) continue;
    const auto role_it = spec.roles.find(cg.name(*t));
    if (role_it == spec.roles.end()) continue;
    if (++placed[*t] > cg.multiplicity_max(*t)) {
      if (warnings) warnings->push_back("node " + std::to_string(i) + " exceeds the multiplicity of " + cg.name(*t));
      continue;
    }
    const TypeRole& role = role_it->second;
    const auto a = self_attributes(bg, i);
    const auto self_kind = bg.edge_type(i, i);
    const bool idle = self_kind && *self_kind == static_cast<std::size_t>(EdgeKind::NoInteraction);

    SceneObject o;
    o.id = static_cast<int>(i);
    o.node = i;
    o.type = cg.name(*t);
    o.kind = role.kind;
    o.length = role.length;
    o.width = role.width;
    if (o.kind == ObjectKind::Av && have_av) o.kind = ObjectKind::Vehicle;

    switch (o.kind) {
      case ObjectKind::Av: {
        have_av = true;
        o.x = decode_attribute(a[0], role.bounds[0], s);
        o.y = decode_attribute(a[1], role.bounds[1], s);
        o.speed = decode_attribute(a[2], role.bounds[2], s);
        o.heading = 0.0;
        o.av.route = spec.av_route;
        o.av.lane_y = o.y;
        o.av.target_y = o.y;
        o.av.passing_y = spec.passing_lane_y;
        o.av.target_speed = o.speed;
        o.av.lane_change_gap = decode_attribute(0.0, spec.lane_change_gap, s);
        break;
      }
      case ObjectKind::Vehicle:
      case ObjectKind::Pedestrian: {
        o.x = decode_attribute(a[0], role.bounds[0], s);
        o.y = decode_attribute(a[1], role.bounds[1], s);
        const double vx = decode_attribute(a[2], role.bounds[2], s);
        const double vy = decode_attribute(a[3], role.bounds[3], s);
        o.heading = (vx == 0.0 && vy == 0.0) ? 0.0 : std::atan2(vy, vx);
        o.speed = idle ? 0.0 : std::hypot(vx, vy);
        break;
      }
      case ObjectKind::StaticVehicle: {
        o.x = decode_attribute(a[0], role.bounds[0], s);
        o.y = decode_attribute(a[1], role.bounds[1], s);
        break;
      }
      case ObjectKind::TrafficLight: {
        o.x = spec.layout.light_position.x;
        o.y = spec.layout.light_position.y;
        o.length = 0.0;
        o.width = 0.0;
        o.light.switch_time = decode_attribute(a[0], role.bounds[0], s);
        o.light.yellow = spec.light_yellow;
        o.light.all_red = spec.light_all_red;
        break;
      }
    }
    if (o.kind != ObjectKind::TrafficLight) place(o, spec.layout, strict, warnings);
    object_of[i] = static_cast<int>(objects.size());
    objects.push_back(std::move(o));
  }

  // Directed interactions: the first one per object sets its behavior
  // relative to the target.
  for (std::size_t i = 0; i < bg.nodes(); ++i) {
    if (object_of[i] < 0) continue;
    SceneObject& o = objects[static_cast<std::size_t>(object_of[i])];
    for (std::size_t j = 0; j < bg.nodes(); ++j) {
      if (j == i || object_of[j] < 0) continue;
      const auto kind = bg.edge_type(i, j);
      if (!kind || *kind != static_cast<std::size_t>(EdgeKind::DirectedInteraction)) continue;
      const SceneObject& target = objects[static_cast<std::size_t>(object_of[j])];
      if (!target.has_footprint()) continue;
      const double attr = edge_attribute0(bg, i, j);
      if (o.kind == ObjectKind::Av && target.kind == ObjectKind::StaticVehicle) {
        o.av.lane_change_gap = decode_attribute(attr, spec.lane_change_gap, s);
        break;
      }
      if ((o.kind == ObjectKind::Vehicle || o.kind == ObjectKind::Pedestrian) && o.speed > 0.0) {
        const Vec2 aim{target.x + decode_attribute(attr, spec.directed_offset, s), target.y};
        if ((aim - o.position()).norm() > 1e-9) o.heading = std::atan2(aim.y - o.y, aim.x - o.x);
        break;
      }
    }
  }
  return objects;
}

// ---------------------------------------------------------------------------
// Sensing and control

std::vector<Detection> radar_scan(const Scene& scene, std::size_t agent, const RadarConfig& radar) {
  std::vector<Detection> out;
  if (agent >= scene.objects.size() || radar.rays <= 0) return out;
  const SceneObject& self = scene.objects[agent];
  const Vec2 origin = self.position();
  for (int k = 0; k < radar.rays; ++k) {
    const double bearing = -0.5 * radar.fov + radar.fov * static_cast<double>(k) / radar.rays;
    const Vec2 dir = unit(self.heading + bearing);
    double best = std::numeric_limits<double>::infinity();
    const SceneObject* hit = nullptr;
    for (std::size_t o = 0; o < scene.objects.size(); ++o) {
      if (o == agent || !scene.objects[o].has_footprint()) continue;
      const auto t = ray_box_hit(origin, dir, scene.objects[o].footprint());
      if (t && *t < best) {
        best = *t;
        hit = &scene.objects[o];
      }
    }
    if (hit && best <= radar.range) out.push_back({best, bearing, hit->id, hit->kind, origin + dir * best});
  }
  return out;
}

namespace {

// Deceleration (negative) that stops within `gap` metres, or -a_max if none.
double stopping_accel(double v, double gap, double a_max) {
  if (gap <= 0.05) return v > 0.0 ? -a_max : 0.0;
  return -std::min(a_max, v * v / (2.0 * gap));
}

}  // namespace

AvDecision av_policy(const AvInput& input, const AvParams& p) {
  AvDecision out;
  if (!input.ego) return out;
  const SceneObject& ego = *input.ego;
  AvBehavior b = ego.av;
  const double v = ego.speed;
  const double front = ego.x + 0.5 * ego.length;
  double accel = std::clamp(b.target_speed - v, -p.comfort_decel, p.cruise_accel);

  for (const auto& d : input.detections) {
    if (d.kind == ObjectKind::StaticVehicle || d.kind == ObjectKind::TrafficLight) continue;
    if (d.range < p.brake_range && std::abs(d.bearing) < 0.5 * p.brake_cone) out.emergency = true;
  }

  // Nearest static obstacle ahead in the tracked lane.
  const Detection* obstacle = nullptr;
  for (const auto& d : input.detections) {
    if (d.kind != ObjectKind::StaticVehicle) continue;
    if (d.point.x <= front - 0.5 || std::abs(d.point.y - b.target_y) >= p.lane_half_width) continue;
    if (!obstacle || d.point.x < obstacle->point.x) obstacle = &d;
  }

  auto hold_behind = [&](const Detection& d) {
    const double gap = d.point.x - front - p.standoff;
    if (gap < v * v / (2.0 * p.comfort_decel) + 0.5 * v + 1.0) accel = std::min(accel, stopping_accel(v, gap, p.a_max));
  };

  if (b.route == Route::LaneChange) {
    switch (b.phase) {
      case LanePhase::Keep:
        if (obstacle && obstacle->point.x - front <= b.lane_change_gap) {
          bool clear = true;
          for (const auto& d : input.detections) {
            if (d.kind == ObjectKind::StaticVehicle || d.kind == ObjectKind::TrafficLight) continue;
            if (std::abs(d.point.y - b.passing_y) < p.clear_margin && d.point.x > ego.x - 5.0) clear = false;
          }
          if (clear) {
            b.phase = LanePhase::Change;
            b.target_y = b.passing_y;
            b.pass_x = obstacle->point.x + p.pass_clearance;
          } else {
            hold_behind(*obstacle);
          }
        } else if (obstacle) {
          hold_behind(*obstacle);
        }
        break;
      case LanePhase::Change:
        if (std::abs(ego.y - b.target_y) < 0.3) b.phase = LanePhase::Pass;
        break;
      case LanePhase::Pass:
        if (ego.x - 0.5 * ego.length > b.pass_x) {
          b.phase = LanePhase::Return;
          b.target_y = b.lane_y;
        }
        break;
      case LanePhase::Return:
        if (std::abs(ego.y - b.target_y) < 0.3) b.phase = LanePhase::Done;
        break;
      case LanePhase::Done:
        if (obstacle) hold_behind(*obstacle);
        break;
    }
  } else if (obstacle) {
    hold_behind(*obstacle);
  }

  if (input.stop_line_x && input.light != LightPhase::Green) {
    const double d = *input.stop_line_x - front;
    if (d > -0.5) {
      const double required = v * v / (2.0 * std::max(d, 0.05));
      if (required <= p.a_max && (required >= p.comfort_decel || d < 2.0)) accel = std::min(accel, -required);
    }
  }

  if (out.emergency) accel = -p.a_max;
  out.action.accel = std::clamp(accel, -p.a_max, p.cruise_accel);

  const double desired = std::clamp(std::atan(p.lateral_gain * (b.target_y - ego.y)), -p.max_heading, p.max_heading);
  out.action.yaw_rate = std::clamp(wrap_angle(desired - ego.heading) / p.heading_time, -p.max_yaw_rate, p.max_yaw_rate);
  out.behavior = b;
  return out;
}

// ---------------------------------------------------------------------------
// Dynamics

Scene step(const Scene& scene, const std::vector<Action>& actions, double dt) {
  Scene next = scene;
  for (std::size_t k = 0; k < next.objects.size(); ++k) {
    SceneObject& o = next.objects[k];
    if (!o.has_footprint()) continue;
    const Action a = k < actions.size() ? actions[k] : Action{};
    double travel = 0.0;
    if (a.accel < 0.0 && o.speed + a.accel * dt <= 0.0) {
      travel = o.speed * o.speed / (-2.0 * a.accel);
      o.speed = 0.0;
    } else {
      travel = o.speed * dt + 0.5 * a.accel * dt * dt;
      o.speed = std::max(0.0, o.speed + a.accel * dt);
    }
    if (a.yaw_rate != 0.0) o.heading = wrap_angle(o.heading + a.yaw_rate * dt);
    o.x += std::cos(o.heading) * travel;
    o.y += std::sin(o.heading) * travel;
  }
  next.time = scene.time + dt;
  return next;
}

double av_clearance(const Scene& scene, int* closest) {
  double best = std::numeric_limits<double>::infinity();
  const auto av = scene.av_index();
  if (!av) return best;
  const Box ego = scene.objects[*av].footprint();
  for (std::size_t k = 0; k < scene.objects.size(); ++k) {
    if (k == *av || !scene.objects[k].has_footprint()) continue;
    const double d = box_distance(ego, scene.objects[k].footprint());
    if (d < best) {
      best = d;
      if (closest) *closest = scene.objects[k].id;
    }
  }
  return best;
}

ScenarioTrace execute_scene(Scene scene, const ScenarioSpec& spec, const AvOverride& override_av) {
  if (!(spec.dt > 0.0)) throw Error(ErrorCode::InvalidConfig, "dt must be > 0");
  ScenarioTrace trace;
  trace.dt = spec.dt;
  trace.substeps = spec.substeps;

  int closest = -1;
  double d = av_clearance(scene, &closest);
  trace.min_distance = d;
  trace.closest_object = closest;
  trace.states.push_back(scene);
  trace.running_min.push_back(d);
  if (d <= 0.0) {
    trace.collided = true;
    return trace;
  }

  const auto av = scene.av_index();
  std::vector<Action> actions(scene.objects.size());
  for (int k = 0; k < spec.max_step && !trace.collided; ++k) {
    for (int s = 0; s < spec.substeps; ++s) {
      // The AV senses and decides every tick; scripted agents hold their program.
      if (av) {
        AvInput input;
        input.ego = &scene.objects[*av];
        input.detections = radar_scan(scene, *av, spec.radar);
        // A signalized stop line without a light object is a dark signal,
        // which the AV treats as red.
        input.stop_line_x = spec.layout.stop_line_x;
        if (const SceneObject* light = scene.light())
          input.light = light->light.cross_phase(scene.time);
        else if (input.stop_line_x)
          input.light = LightPhase::Red;
        const AvDecision decision = av_policy(input, spec.av);
        actions[*av] = override_av ? override_av(input, decision, k * spec.substeps + s) : decision.action;
        scene.objects[*av].av = decision.behavior;
      }
      scene = step(scene, actions, spec.dt);
      d = av_clearance(scene, &closest);
      if (d < trace.min_distance) {
        trace.min_distance = d;
        trace.closest_object = closest;
      }
      if (d <= 0.0) {
        trace.collided = true;
        break;
      }
    }
    trace.step_count = k + 1;
    trace.states.push_back(scene);
    trace.running_min.push_back(trace.min_distance);
  }
  return trace;
}

ScenarioTrace execute(const BehavioralGraph& bg, const ScenarioSpec& spec, bool strict, const AvOverride& override_av) {
  std::vector<std::string> warnings;
  Scene scene;
  scene.objects = instantiate(bg, spec, strict, &warnings);
  ScenarioTrace trace = execute_scene(std::move(scene), spec, override_av);
  trace.warnings = std::move(warnings);
  return trace;
}

int objective(const ScenarioTrace& trace, double epsilon) { return trace.min_distance < epsilon ? 1 : 0; }

}  // namespace causalaf
