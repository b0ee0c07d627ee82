#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "causalaf/simulator.hpp"
#include "causalaf/trainer.hpp"
#include "test_util.hpp"

using namespace causalaf;
using causalaf::testing::error_code_of;

namespace {

SceneObject vehicle(int id, double x, double y, double heading = 0.0, double speed = 0.0,
                    ObjectKind kind = ObjectKind::Vehicle) {
  SceneObject o;
  o.id = id;
  o.kind = kind;
  o.x = x;
  o.y = y;
  o.heading = heading;
  o.speed = speed;
  return o;
}

// Slab intersection of a ray with an oriented rectangle, written in the box frame.
std::optional<double> oracle_hit(Vec2 origin, Vec2 dir, const SceneObject& o) {
  const double c = std::cos(o.heading), s = std::sin(o.heading);
  const Vec2 rel = origin - o.position();
  const double p[2] = {rel.x * c + rel.y * s, -rel.x * s + rel.y * c};
  const double d[2] = {dir.x * c + dir.y * s, -dir.x * s + dir.y * c};
  const double half[2] = {0.5 * o.length, 0.5 * o.width};
  double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 2; ++a) {
    if (std::abs(d[a]) < 1e-15) {
      if (std::abs(p[a]) > half[a]) return std::nullopt;
      continue;
    }
    double t1 = (-half[a] - p[a]) / d[a], t2 = (half[a] - p[a]) / d[a];
    if (t1 > t2) std::swap(t1, t2);
    lo = std::max(lo, t1);
    hi = std::min(hi, t2);
  }
  if (hi < 0.0 || lo > hi) return std::nullopt;
  return std::max(lo, 0.0);
}

void set_node(BehavioralGraph& bg, const ScenarioSpec& spec, std::size_t i, const std::string& type,
              std::array<double, 4> physical) {
  const TypeId t = spec.cg.index_of(type);
  bg.node(i)[t] = 1.0;
  auto e = bg.edge(i, i);
  e[static_cast<std::size_t>(EdgeKind::IndependentAction)] = 1.0;
  const auto& b = spec.roles.at(type).bounds;
  for (std::size_t k = 0; k < 4; ++k) e[3 + k] = encode_attribute(physical[k], b[k], spec.attribute_scale);
}

}  // namespace

TEST(Radar, ObstacleDeadAhead) {
  Scene scene;
  scene.objects = {vehicle(0, 0, 0, 0, 0, ObjectKind::Av), vehicle(1, 20 + 2.25, 0)};
  const auto det = radar_scan(scene, 0, RadarConfig{});
  ASSERT_FALSE(det.empty());
  bool centre = false;
  for (const auto& d : det) {
    EXPECT_EQ(d.object_id, 1);
    if (d.bearing == 0.0) {
      centre = true;
      EXPECT_NEAR(d.range, 20.0, 1e-9);
    }
  }
  EXPECT_TRUE(centre);
}

TEST(Radar, NearerFootprintOccludes) {
  Scene scene;
  auto ped = vehicle(2, 30, 0, 0, 0, ObjectKind::Pedestrian);
  ped.length = ped.width = 0.8;
  scene.objects = {vehicle(0, 0, 0, 0, 0, ObjectKind::Av), vehicle(1, 15, 0, 0, 0, ObjectKind::StaticVehicle), ped};
  for (const auto& d : radar_scan(scene, 0, RadarConfig{})) EXPECT_EQ(d.object_id, 1);
  scene.objects.erase(scene.objects.begin() + 1);
  bool sees_ped = false;
  for (const auto& d : radar_scan(scene, 0, RadarConfig{})) sees_ped |= d.object_id == 2;
  EXPECT_TRUE(sees_ped);
}

TEST(Radar, BeyondRange) {
  Scene scene;
  scene.objects = {vehicle(0, 0, 0, 0, 0, ObjectKind::Av), vehicle(1, 45, 0)};
  EXPECT_TRUE(radar_scan(scene, 0, RadarConfig{}).empty());
}

TEST(Radar, MatchesExhaustiveOracle) {
  Rng rng(2024);
  const RadarConfig radar{};
  for (int trial = 0; trial < 1000; ++trial) {
    Scene scene;
    auto agent = vehicle(0, 0, 0, (rng.uniform() - 0.5) * 2 * std::numbers::pi, 0, ObjectKind::Av);
    scene.objects.push_back(agent);
    const int count = 1 + static_cast<int>(rng.uniform() * 8);
    for (int k = 1; k <= count; ++k) {
      auto o = vehicle(k, (rng.uniform() - 0.5) * 80, (rng.uniform() - 0.5) * 80, rng.uniform() * 6.3);
      o.length = 0.5 + rng.uniform() * 6;
      o.width = 0.5 + rng.uniform() * 3;
      scene.objects.push_back(o);
    }
    const auto got = radar_scan(scene, 0, radar);
    std::size_t g = 0;
    for (int k = 0; k < radar.rays; ++k) {
      const double bearing = -0.5 * radar.fov + radar.fov * k / radar.rays;
      const Vec2 dir = unit(agent.heading + bearing);
      double best = std::numeric_limits<double>::infinity();
      int id = -1;
      for (std::size_t o = 1; o < scene.objects.size(); ++o) {
        const auto t = oracle_hit(agent.position(), dir, scene.objects[o]);
        if (t && *t < best) {
          best = *t;
          id = scene.objects[o].id;
        }
      }
      if (id < 0 || best > radar.range) continue;
      ASSERT_LT(g, got.size()) << "trial " << trial;
      EXPECT_NEAR(got[g].bearing, bearing, 1e-12);
      EXPECT_NEAR(got[g].range, best, 1e-9) << "trial " << trial << " ray " << k;
      EXPECT_EQ(got[g].object_id, id) << "trial " << trial << " ray " << k;
      ++g;
    }
    EXPECT_EQ(g, got.size()) << "trial " << trial;
  }
}

TEST(AvPolicy, CruisesWithoutDetections) {
  auto ego = vehicle(0, 0, 0, 0, 5, ObjectKind::Av);
  ego.av.target_speed = 10;
  AvInput in;
  in.ego = &ego;
  const AvParams p;
  const auto d = av_policy(in, p);
  EXPECT_DOUBLE_EQ(d.action.accel, p.cruise_accel);
  EXPECT_DOUBLE_EQ(d.action.yaw_rate, 0.0);
  EXPECT_FALSE(d.emergency);
}

TEST(AvPolicy, BrakesForCloseObject) {
  auto ego = vehicle(0, 0, 0, 0, 10, ObjectKind::Av);
  ego.av.target_speed = 10;
  AvInput in;
  in.ego = &ego;
  in.detections.push_back({5.0, 0.0, 1, ObjectKind::Pedestrian, {5.0, 0.0}});
  const AvParams p;
  const auto d = av_policy(in, p);
  EXPECT_DOUBLE_EQ(d.action.accel, -p.a_max);
  EXPECT_DOUBLE_EQ(d.action.yaw_rate, 0.0);
  EXPECT_TRUE(d.emergency);
}

TEST(AvPolicy, BrakingTooLateStillCollides) {
  // Pedestrian appears inside the stopping distance v^2 / (2 a_max).
  const AvParams p;
  const double v = 12.0;
  const double stop = v * v / (2.0 * p.a_max);
  Scene scene;
  auto av = vehicle(0, 0, 0, 0, v, ObjectKind::Av);
  av.av.target_speed = v;
  auto ped = vehicle(1, 0.5 * av.length + 0.4 + 0.6 * stop, 0, 0, 0, ObjectKind::Pedestrian);
  ped.length = ped.width = 0.8;
  scene.objects = {av, ped};
  ScenarioSpec spec = builtin_scenario("pedestrian");
  spec.layout.stop_line_x.reset();
  const auto trace = execute_scene(scene, spec);
  EXPECT_TRUE(trace.collided);

  // The same pedestrian outside the stopping distance is avoided.
  scene.objects[1].x = 0.5 * av.length + 0.4 + stop + 2.0;
  EXPECT_FALSE(execute_scene(scene, spec).collided);
}

TEST(Step, ZeroActionStillScene) {
  Scene scene;
  scene.objects = {vehicle(0, 1, 2, 0.3), vehicle(1, -4, 5, 1.0)};
  const auto next = step(scene, {}, 0.1);
  EXPECT_EQ(next.objects, scene.objects);
}

TEST(Step, ConstantVelocityAdvance) {
  Scene scene;
  scene.objects = {vehicle(0, 0, 0, 0, 10)};
  const auto next = step(scene, {Action{}}, 0.1);
  EXPECT_DOUBLE_EQ(next.objects[0].x, 1.0);
  EXPECT_DOUBLE_EQ(next.objects[0].y, 0.0);
}

TEST(Step, StoppingDistance) {
  Scene scene;
  scene.objects = {vehicle(0, 0, 0, 0, 10)};
  const double dt = 0.1, a = 5.0;
  double t = 0.0, last_speed = 10.0;
  while (scene.objects[0].speed > 0.0) {
    scene = step(scene, {Action{-a, 0.0}}, dt);
    t += dt;
    EXPECT_LE(scene.objects[0].speed, last_speed);
    last_speed = scene.objects[0].speed;
    ASSERT_LT(t, 10.0);
  }
  EXPECT_NEAR(t, 2.0, dt + 1e-9);
  EXPECT_NEAR(scene.objects[0].x, 10.0 * 10.0 / (2.0 * a), 10.0 * dt);
}

TEST(Execute, OverlapAtStart) {
  Scene scene;
  scene.objects = {vehicle(0, 0, 0, 0, 5, ObjectKind::Av), vehicle(1, 3, 0)};
  const auto trace = execute_scene(scene, builtin_scenario("pedestrian"));
  EXPECT_TRUE(trace.collided);
  EXPECT_EQ(trace.min_distance, 0.0);
  EXPECT_EQ(trace.step_count, 0);
}

TEST(Execute, EmptyScene) {
  const auto spec = builtin_scenario("pedestrian");
  const BehavioralGraph bg(scenario_dims(spec).m, spec.cg.size(), 3, 4);
  const auto trace = execute(bg, spec);
  EXPECT_FALSE(trace.collided);
  EXPECT_EQ(trace.step_count, spec.max_step);
  EXPECT_EQ(trace.states.size(), static_cast<std::size_t>(spec.max_step + 1));
  EXPECT_TRUE(std::isinf(trace.min_distance));
  EXPECT_EQ(objective(trace, spec.epsilon), 0);
}

TEST(Execute, StaticVehicleDecode) {
  const auto spec = builtin_scenario("pedestrian");
  BehavioralGraph bg(4, spec.cg.size(), 3, 4);
  set_node(bg, spec, 0, "S", {33.0, -3.2, 0, 0});
  bg.set_nodes(1);
  const auto objs = instantiate(bg, spec);
  ASSERT_EQ(objs.size(), 1u);
  EXPECT_EQ(objs[0].kind, ObjectKind::StaticVehicle);
  EXPECT_NEAR(objs[0].x, 33.0, 1e-9);
  EXPECT_NEAR(objs[0].y, -3.2, 1e-9);
  EXPECT_EQ(objs[0].speed, 0.0);
}

TEST(Execute, DirectedPedestrianAimsAtLane) {
  const auto spec = builtin_scenario("pedestrian");
  BehavioralGraph bg(4, spec.cg.size(), 3, 4);
  set_node(bg, spec, 0, "S", {30.0, -3.2, 0, 0});
  set_node(bg, spec, 1, "A", {5.0, 0.0, 10.0, 0});
  set_node(bg, spec, 2, "P", {40.0, -6.0, 0.0, 2.0});
  auto e = bg.edge(2, 1);
  e[static_cast<std::size_t>(EdgeKind::DirectedInteraction)] = 1.0;
  const double offset = 3.0;
  e[3] = encode_attribute(offset, spec.directed_offset, spec.attribute_scale);
  bg.set_nodes(3);
  const auto objs = instantiate(bg, spec);
  ASSERT_EQ(objs.size(), 3u);
  const auto& av = objs[1];
  const auto& ped = objs[2];
  // Intersection of the pedestrian's heading line with the AV lane centreline.
  const double x_cross = ped.x + (av.y - ped.y) / std::tan(ped.heading);
  EXPECT_NEAR(x_cross, av.x + offset, 1e-9);
}

TEST(Execute, OccludedPedestrianCollides) {
  const auto spec = builtin_scenario("pedestrian");
  BehavioralGraph bg(4, spec.cg.size(), 3, 4);
  // S parks just south of the AV lane. P starts hidden behind it and walks
  // north into the lane when the AV is too close to stop.
  set_node(bg, spec, 0, "S", {35.0, -3.6, 0, 0});
  set_node(bg, spec, 1, "P", {36.0, -4.5, 0, 2.0});
  set_node(bg, spec, 2, "A", {9.0, 0.0, 13.5, 0});
  bg.set_nodes(3);

  Scene start;
  start.objects = instantiate(bg, spec);
  const auto av = *start.av_index();
  for (const auto& d : radar_scan(start, av, spec.radar)) EXPECT_NE(d.kind, ObjectKind::Pedestrian);

  const auto trace = execute(bg, spec);
  EXPECT_TRUE(trace.collided);
  EXPECT_EQ(objective(trace, spec.epsilon), 1);
  EXPECT_EQ(trace.closest_object, 1);
}

TEST(Execute, Deterministic) {
  const auto spec = builtin_scenario("lane-changing");
  BehavioralGraph bg(4, spec.cg.size(), 3, 4);
  set_node(bg, spec, 0, "S", {35.0, 0.0, 0, 0});
  set_node(bg, spec, 1, "R", {120.0, 3.5, -10, 0});
  set_node(bg, spec, 2, "A", {5.0, 0.0, 12.0, 0});
  bg.set_nodes(3);
  const auto a = execute(bg, spec);
  const auto b = execute(bg, spec);
  EXPECT_EQ(a.states, b.states);
  EXPECT_EQ(a.min_distance, b.min_distance);
  EXPECT_EQ(a.running_min, b.running_min);
  for (std::size_t k = 1; k < a.running_min.size(); ++k) EXPECT_LE(a.running_min[k], a.running_min[k - 1]);
}

TEST(Execute, FarApartNeverCollides) {
  auto spec = builtin_scenario("pedestrian");
  spec.layout.areas.clear();
  Scene scene;
  scene.objects = {vehicle(0, 0, 0, 0, 10, ObjectKind::Av), vehicle(1, -500, 300, 0, 10),
                   vehicle(2, 600, -400, std::numbers::pi, 5)};
  scene.objects[0].av.target_speed = 10;
  const auto trace = execute_scene(scene, spec);
  EXPECT_GT(trace.min_distance, spec.radar.range);
  EXPECT_EQ(objective(trace, spec.epsilon), 0);
}

TEST(Execute, StrictModeRejectsOffRoad) {
  const auto spec = builtin_scenario("pedestrian");
  BehavioralGraph bg(4, spec.cg.size(), 3, 4);
  set_node(bg, spec, 0, "S", {35.0, -3.2, 0, 0});
  bg.set_nodes(1);
  auto moved = spec;
  moved.roles["S"].bounds[1] = {20.0, 30.0};
  EXPECT_EQ(error_code_of([&] { instantiate(bg, moved, true); }), ErrorCode::UnplaceableObject);
  std::vector<std::string> warnings;
  const auto objs = instantiate(bg, moved, false, &warnings);
  EXPECT_FALSE(warnings.empty());
  EXPECT_TRUE(moved.layout.areas[0].contains(objs[0].position()));
}

TEST(Objective, StrictThreshold) {
  ScenarioTrace t;
  t.min_distance = 0.0;
  EXPECT_EQ(objective(t, 0.5), 1);
  t.min_distance = 10.0;
  EXPECT_EQ(objective(t, 0.5), 0);
  t.min_distance = 0.5;
  EXPECT_EQ(objective(t, 0.5), 0);
}

TEST(Attributes, DecodeEncode) {
  const Range r{-3.0, 7.0};
  EXPECT_DOUBLE_EQ(decode_attribute(0.0, r, 2.0), 2.0);
  for (double x : {-2.9, 0.0, 3.3, 6.9}) EXPECT_NEAR(decode_attribute(encode_attribute(x, r, 2.0), r, 2.0), x, 1e-9);
  EXPECT_EQ(decode_attribute(5.0, {4.0, 4.0}, 2.0), 4.0);
}

TEST(ScenarioSpec, JsonRoundTrip) {
  for (const auto& name : builtin_scenario_names()) {
    const auto spec = builtin_scenario(name, 2);
    EXPECT_EQ(scenario_spec_from_json(nlohmann::json::parse(to_json(spec).dump())), spec) << name;
  }
}
