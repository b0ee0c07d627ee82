// Acceptance gate: one PASS/FAIL line per criterion. Criterion 8 is reported
// but does not affect the exit status.

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "causalaf/experiments.hpp"
#include "causalaf/flow_model.hpp"
#include "causalaf/generator.hpp"
#include "causalaf/simulator.hpp"
#include "causalaf/trainer.hpp"
#include "../test_util.hpp"

using namespace causalaf;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fixed(double v, int digits = 3) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

const std::vector<std::string> kScenarios{"traffic-light", "pedestrian", "lane-changing"};

fs::path scratch_dir() {
  const auto dir = fs::temp_directory_path() / "causalaf_acceptance";
  fs::create_directories(dir);
  return dir;
}

// ---------------------------------------------------------------------------
// 1 and 3: mask-mode ablation, then agent robustness on its checkpoints.

Verdict ablation(const fs::path& ckpt_dir) {
  ExperimentPlan plan;
  plan.kind = ExperimentKind::Ablation;
  plan.scenarios = kScenarios;
  plan.seeds = {0, 1, 2};
  plan.train.episodes = 2000;
  plan.checkpoint_dir = ckpt_dir.string();
  const auto result = run_ablation(plan);

  std::map<std::string, std::vector<double>> caf;
  for (const auto& r : result.runs)
    if (r.mode == MaskMode::CausalAF) caf[r.scenario].push_back(r.final_mean);

  Verdict v{true, ""};
  for (const auto& [name, ordered] : ablation_ordering(result)) {
    const auto& xs = caf[name];
    double m = 0.0;
    for (double x : xs) m += x / static_cast<double>(xs.size());
    const double floor = name == "traffic-light" ? 0.8 : 0.7;
    v.pass = v.pass && ordered >= 2 && m >= floor;
    v.detail += name + " ordered " + std::to_string(ordered) + "/3 causalaf " + fixed(m, 2) + " (>= " +
                fixed(floor, 1) + "); ";
  }
  return v;
}

Verdict robustness(const fs::path& ckpt_dir) {
  ExperimentPlan plan;
  plan.kind = ExperimentKind::Robustness;
  plan.scenarios = kScenarios;
  plan.seeds = {0, 1, 2};
  plan.checkpoint_dir = ckpt_dir.string();
  const auto result = run_robustness(plan);

  std::map<std::string, int> wins;
  for (const auto& row : result.rows) wins[row.scenario] += row.generated_trained > row.random_trained;
  Verdict v{true, ""};
  for (const auto& name : kScenarios) {
    v.pass = v.pass && wins[name] >= 2;
    v.detail += name + " " + std::to_string(wins[name]) + "/3; ";
  }
  return v;
}

// ---------------------------------------------------------------------------
// 2: irrelevant-node sweep on pedestrian.

Verdict node_sweep() {
  ExperimentPlan plan;
  plan.kind = ExperimentKind::NodeSweep;
  plan.scenarios = {"pedestrian"};
  plan.seeds = {0, 1, 2, 3, 4};
  plan.modes = {MaskMode::Baseline, MaskMode::CausalAF};
  plan.train.episodes = 8000;
  const auto result = run_node_sweep(plan);
  const auto check = check_node_sweep(result);

  std::map<int, std::pair<double, int>> base;
  for (const auto& r : result.runs)
    if (r.mode == MaskMode::Baseline) {
      base[r.irrelevant].first += r.final_mean;
      ++base[r.irrelevant].second;
    }
  std::string trend;
  for (const auto& [n, acc] : base) trend += (trend.empty() ? "" : " ") + fixed(acc.first / acc.second, 2);
  return {check.consistent && check.baseline_drops,
          "causalaf spread " + fixed(check.causalaf_spread) + " (< 0.1); baseline " + trend + " with " +
              std::to_string(check.baseline_inversions) + " inversion(s)"};
}

// ---------------------------------------------------------------------------
// 4: flow correctness.

FlowParameters noisy_params(const FlowDims& dims, std::size_t layers, std::uint64_t seed, double scale) {
  auto p = FlowParameters::create(dims, {8, layers}, seed);
  Rng rng(seed + 1);
  for (double& v : p.values()) v += scale * rng.gaussian();
  return p;
}

StepConditioning one_coord(std::vector<double> mus, std::vector<double> log_sigmas) {
  StepConditioning c;
  for (std::size_t k = 0; k < mus.size(); ++k) {
    c.mu.push_back({mus[k]});
    c.log_sigma.push_back({log_sigmas[k]});
  }
  return c;
}

Verdict flow_correctness() {
  const CausalGraph cg = CausalGraph::build({{"a", {}}, {"b", {"a"}}, {"c", {}}});
  const FlowDims dims{3, 3, 3, 2};
  auto draw = [&](const FlowParameters& p, std::uint64_t seed, double temperature) {
    SamplerConfig cfg;
    cfg.cg = cg;
    cfg.seed = seed;
    cfg.temperature = temperature;
    return sample_bg(p, cfg);
  };

  double round_trip = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto p = noisy_params(dims, 1 + seed % 3, seed, 0.4);
    const auto s = draw(p, seed, 1.0);
    const auto z = invert(p, s.record);
    for (std::size_t k = 0; k < z.size(); ++k) {
      const auto x = flow_forward(s.record.steps[k].cond, z[k]);
      for (std::size_t d = 0; d < x.size(); ++d)
        round_trip = std::max(round_trip, std::abs(x[d] - s.record.steps[k].value[d]));
    }
  }

  const std::vector<std::uint8_t> active{1};
  double mass_lo = std::numeric_limits<double>::infinity(), mass_hi = 0.0;
  for (const auto& [mu, ls, temperature] :
       std::vector<std::tuple<std::vector<double>, std::vector<double>, double>>{
           {{0.0}, {0.0}, 1.0}, {{1.5}, {0.4}, 2.0}, {{-0.7, 0.3}, {0.2, -0.5}, 1.0},
           {{2.0, -1.0, 0.5}, {-0.3, 0.1, 0.2}, 0.5}}) {
    const auto cond = one_coord(mu, ls);
    const int n = 40000;
    const double a = -20.0, b = 20.0, h = (b - a) / n;
    double sum = 0.0;
    for (int k = 0; k <= n; ++k) {
      const double f = std::exp(step_log_density(cond, std::vector<double>{a + h * k}, temperature, active));
      sum += (k == 0 || k == n) ? 0.5 * f : f;
    }
    mass_lo = std::min(mass_lo, sum * h);
    mass_hi = std::max(mass_hi, sum * h);
  }

  double grad_err = 0.0;
  const double h = 1e-5;
  for (std::uint64_t id = 0; id < 100; ++id) {
    auto p = noisy_params(dims, id % 2 ? 2 : 1, 100 + id, 0.3);
    const auto s = draw(p, 200 + id, 0.5 + 0.01 * static_cast<double>(id));
    const auto g = grad_log_likelihood(p, s.record);
    for (std::size_t k = id % 7; k < p.size(); k += 7) {
      const double keep = p.values()[k];
      p.values()[k] = keep + h;
      const double up = log_likelihood(p, s.record);
      p.values()[k] = keep - h;
      const double down = log_likelihood(p, s.record);
      p.values()[k] = keep;
      const double fd = (up - down) / (2.0 * h);
      grad_err = std::max(grad_err, std::abs(g[k] - fd) / std::max({std::abs(g[k]), std::abs(fd), 1e-2}));
    }
  }

  const double std_zero = step_log_density(one_coord({0.0}, {0.0}), std::vector<double>{0.0}, 1.0, active);
  const double scaled = step_log_density(one_coord({0.0}, {std::log(2.0)}), std::vector<double>{2.0}, 1.0, active);
  const double analytic = std::max(std::abs(std_zero + 0.5 * std::log(2.0 * std::numbers::pi)),
                                   std::abs(scaled + 0.5 * std::log(2.0 * std::numbers::pi) + std::log(2.0) + 0.5));
  const bool pass = round_trip < 1e-9 && mass_lo >= 0.999 && mass_hi <= 1.001 && grad_err < 1e-4 &&
                    analytic < 1e-6 && std::abs(std_zero + 0.91894) < 1e-5;

  std::ostringstream os;
  os << std::scientific << std::setprecision(1) << "round trip " << round_trip << "; mass [" << std::fixed
     << std::setprecision(5) << mass_lo << ", " << mass_hi << "]; grad rel err " << std::scientific
     << std::setprecision(1) << grad_err << "; analytic err " << analytic << "; N(0;0,1) " << std::fixed
     << std::setprecision(5) << std_zero;
  return {pass, os.str()};
}

// ---------------------------------------------------------------------------
// 5: causal-mask soundness.

Verdict mask_soundness() {
  std::string detail;
  bool pass = true;

  for (const auto& name : kScenarios) {
    const auto spec = builtin_scenario(name);
    auto params = FlowParameters::create(scenario_dims(spec), {16, 1}, 1);
    Rng noise(11);
    for (double& v : params.values()) v += 0.3 * noise.gaussian();
    SamplerConfig cfg;
    cfg.cg = spec.cg;
    Rng rng(3);
    std::size_t order = 0, multiplicity = 0, other = 0;
    for (int k = 0; k < 10000; ++k)
      for (const auto& v : validate_bg(sample_bg(params, cfg, rng).graph, spec.cg)) {
        if (v.kind == ViolationKind::OrderViolation) ++order;
        else if (v.kind == ViolationKind::MultiplicityExceeded) ++multiplicity;
        else ++other;
      }
    pass = pass && order == 0 && multiplicity == 0 && other == 0;
    detail += name + " " + std::to_string(order) + "/" + std::to_string(multiplicity) + "; ";
  }

  // Hidden context entries must not reach the edge conditioner.
  std::size_t cvm_checked = 0, cvm_mismatch = 0;
  for (const auto& name : kScenarios) {
    const auto spec = builtin_scenario(name, 2);
    auto params = FlowParameters::create(scenario_dims(spec), {16, 1}, 2);
    Rng noise(12);
    for (double& v : params.values()) v += 0.3 * noise.gaussian();
    SamplerConfig cfg;
    cfg.cg = spec.cg;
    Rng rng(4), perturb(5);
    for (int k = 0; k < 200; ++k) {
      const auto bg = sample_bg(params, cfg, rng).graph;
      for (std::size_t i = 0; i < bg.nodes(); ++i) {
        const auto masks = cvm_masks(spec.cg, bg, i);
        BehavioralGraph noisy = bg;
        const std::size_t n = bg.n(), w = bg.edge(0, 0).size();
        for (std::size_t r = 0; r < bg.m(); ++r) {
          for (std::size_t t = 0; t < n; ++t)
            if (!masks.cvm_node[r * n + t]) noisy.node(r)[t] = perturb.gaussian();
          for (std::size_t c = 0; c < bg.m(); ++c)
            for (std::size_t d = 0; d < w; ++d)
              if (!masks.cvm_edge[(r * bg.m() + c) * w + d]) noisy.edge(r, c)[d] = perturb.gaussian();
        }
        const auto clean_view = compact(apply_cvm(bg, masks), masks.permutation);
        const auto noisy_view = compact(apply_cvm(noisy, masks), masks.permutation);
        const std::size_t p = masks.permutation.size() - 1;
        for (std::size_t b = 0; b <= p; ++b) {
          ++cvm_checked;
          cvm_mismatch += !(condition_edge(params, clean_view, p, b) == condition_edge(params, noisy_view, p, b));
        }
      }
    }
  }
  pass = pass && cvm_mismatch == 0 && cvm_checked > 0;
  detail += "cvm " + std::to_string(cvm_mismatch) + " mismatches of " + std::to_string(cvm_checked) + "; ";

  std::size_t dags = 0, differ = 0;
  bool consistent = true;
  Rng dag_rng(17);
  for (std::size_t n = 1; n <= 5; ++n)
    for (int trial = 0; trial < 100; ++trial) {
      const auto cg = causalaf::testing::random_dag(n, dag_rng);
      std::set<std::vector<TypeId>> reached;
      std::vector<TypeId> prefix;
      TypeCounts counts(cg.size(), 0);
      causalaf::testing::reachable_orders(cg, prefix, counts, reached, consistent);
      ++dags;
      differ += reached != causalaf::testing::brute_force_orders(cg);
    }
  pass = pass && differ == 0 && consistent;
  detail += "orders differ on " + std::to_string(differ) + " of " + std::to_string(dags) + " DAGs";
  return {pass, "order/multiplicity violations " + detail};
}

// ---------------------------------------------------------------------------
// 6: REINFORCE on an enumerable toy.

Verdict reinforce_toy() {
  const CausalGraph cg = CausalGraph::build({{"X", {}, true, 2}, {"Y", {}, true, 2}});
  auto reward = [](const BehavioralGraph& bg) { return bg.type_of(0) == TypeId{0} && bg.type_of(1) == TypeId{0}; };
  auto p = FlowParameters::create({2, 2, 3, 4}, {8, 1}, 3);
  const auto& net = p.net(StepKind::Node, 0);
  const double bias[4] = {0.3, -0.2, 0.2, -0.1};
  for (std::size_t k = 0; k < 4; ++k) p.values()[net.b3() + k] = bias[k];

  // With zero output weights both node draws are independent: P(X) is a normal tail.
  auto objective = [&](const FlowParameters& q) {
    const auto c = condition(q, StepKind::Node, std::vector<double>(q.context_size(StepKind::Node), 0.0));
    const double sx = std::exp(c.log_sigma[0][0]), sy = std::exp(c.log_sigma[0][1]);
    const double px = 0.5 * std::erfc(-(c.mu[0][0] - c.mu[0][1]) / std::sqrt(2.0 * (sx * sx + sy * sy)));
    return px * px;
  };
  std::vector<double> exact(4);
  for (std::size_t d = 0; d < 4; ++d) {
    double& v = p.values()[net.b3() + d];
    const double keep = v, h = 1e-6;
    v = keep + h;
    const double up = objective(p);
    v = keep - h;
    const double down = objective(p);
    v = keep;
    exact[d] = (up - down) / (2 * h);
  }

  SamplerConfig cfg;
  cfg.cg = cg;
  const std::size_t n = 100000, chunk = 5000;
  double worst = 0.0;
  for (double baseline : {0.0, 0.5}) {
    std::vector<double> mc(4, 0.0);
    for (std::size_t start = 0; start < n; start += chunk) {
      std::vector<Rollout> batch;
      for (std::size_t k = start; k < start + chunk; ++k) {
        Rng rng = Rng::derive(77, k);
        auto s = sample_bg(p, cfg, rng);
        batch.push_back({std::move(s.record), static_cast<double>(reward(s.graph))});
      }
      const auto part = reinforce_gradient(p, batch, baseline);
      for (std::size_t d = 0; d < 4; ++d) mc[d] += part[net.b3() + d] * static_cast<double>(chunk) / n;
    }
    double num = 0.0, den = 0.0;
    for (std::size_t d = 0; d < 4; ++d) {
      num += (mc[d] - exact[d]) * (mc[d] - exact[d]);
      den += exact[d] * exact[d];
    }
    worst = std::max(worst, std::sqrt(num / den));
  }
  return {worst < 0.05, "relative error " + fixed(worst, 4) + " (< 0.05) over baselines 0 and 0.5"};
}

// ---------------------------------------------------------------------------
// 7: simulator determinism and physics.

SceneObject box(int id, double x, double y, double heading, ObjectKind kind) {
  SceneObject o;
  o.id = id;
  o.kind = kind;
  o.x = x;
  o.y = y;
  o.heading = heading;
  return o;
}

std::optional<double> slab_hit(Vec2 origin, Vec2 dir, const SceneObject& o) {
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

Verdict simulator_checks() {
  std::size_t identical = 0, runs = 0;
  for (const auto& name : kScenarios) {
    const auto spec = builtin_scenario(name);
    for (const auto& bg : random_scenarios(spec, 50, 9)) {
      const auto a = execute(bg, spec), b = execute(bg, spec);
      ++runs;
      identical += a.states == b.states && a.running_min == b.running_min &&
                   std::memcmp(&a.min_distance, &b.min_distance, sizeof(double)) == 0;
    }
  }

  Scene scene;
  scene.objects = {box(0, 0, 0, 0, ObjectKind::Vehicle)};
  scene.objects[0].speed = 10.0;
  const double dt = 0.1, decel = 5.0;
  for (int k = 0; k < 1000 && scene.objects[0].speed > 0.0; ++k) scene = step(scene, {Action{-decel, 0.0}}, dt);
  const double closed_form = 10.0 * 10.0 / (2.0 * decel);
  const double stop_err = std::abs(scene.objects[0].x - closed_form);

  Rng rng(2024);
  const RadarConfig radar{};
  std::size_t scenes_ok = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    Scene s;
    const auto agent = box(0, 0, 0, (rng.uniform() - 0.5) * 2 * std::numbers::pi, ObjectKind::Av);
    s.objects.push_back(agent);
    const int count = 1 + static_cast<int>(rng.uniform() * 8);
    for (int k = 1; k <= count; ++k) {
      auto o = box(k, (rng.uniform() - 0.5) * 80, (rng.uniform() - 0.5) * 80, rng.uniform() * 6.3,
                   ObjectKind::Vehicle);
      o.length = 0.5 + rng.uniform() * 6;
      o.width = 0.5 + rng.uniform() * 3;
      s.objects.push_back(o);
    }
    const auto got = radar_scan(s, 0, radar);
    std::size_t g = 0;
    bool ok = true;
    for (int k = 0; k < radar.rays && ok; ++k) {
      const double bearing = -0.5 * radar.fov + radar.fov * k / radar.rays;
      double best = std::numeric_limits<double>::infinity();
      int id = -1;
      for (std::size_t o = 1; o < s.objects.size(); ++o) {
        const auto t = slab_hit(agent.position(), unit(agent.heading + bearing), s.objects[o]);
        if (t && *t < best) {
          best = *t;
          id = s.objects[o].id;
        }
      }
      if (id < 0 || best > radar.range) continue;
      ok = g < got.size() && std::abs(got[g].bearing - bearing) < 1e-12 && std::abs(got[g].range - best) < 1e-9 &&
           got[g].object_id == id;
      ++g;
    }
    scenes_ok += ok && g == got.size();
  }

  const bool pass = identical == runs && stop_err <= 10.0 * dt && scenes_ok == 1000;
  return {pass, "identical traces " + std::to_string(identical) + "/" + std::to_string(runs) + "; stopping " +
                    fixed(scene.objects[0].x) + " m vs " + fixed(closed_form) + " m (tolerance " + fixed(10.0 * dt) +
                    "); radar oracle " + std::to_string(scenes_ok) + "/1000"};
}

// ---------------------------------------------------------------------------
// 8: collision likelihood under the true graph against an edge-deleted one.

Verdict likelihood_probe_check() {
  ExperimentPlan plan;
  plan.kind = ExperimentKind::Probe;
  plan.scenarios = {"pedestrian"};
  plan.seeds = {0, 1, 2};
  plan.train.episodes = 2000;
  const auto result = run_probe(plan);
  int higher = 0;
  std::string rates;
  for (const auto& row : result.rows) {
    higher += row.true_graph.rate > row.perturbed.rate;
    rates += " " + fixed(row.true_graph.rate) + "/" + fixed(row.perturbed.rate);
  }
  return {higher >= 2, "true graph higher on " + std::to_string(higher) + "/3 seeds without " +
                           (result.rows.empty() ? std::string("?") : result.rows.front().removed_edge) +
                           " (true/deleted:" + rates + ")"};
}

void report(int id, const std::string& title, Verdict v, bool gating = true) {
  while (!v.detail.empty() && (v.detail.back() == ' ' || v.detail.back() == ';')) v.detail.pop_back();
  std::cout << "C" << id << " " << (v.pass ? "PASS" : "FAIL") << (gating ? "" : " (soft)") << " " << title << ": "
            << v.detail << std::endl;
}

}  // namespace

int main() {
  const auto dir = scratch_dir();
  const auto ckpt = dir / "checkpoints";
  fs::remove_all(ckpt);
  fs::create_directories(ckpt);

  bool ok = true;
  auto gate = [&](int id, const std::string& title, const Verdict& v) {
    report(id, title, v);
    ok = ok && v.pass;
  };
  gate(1, "ablation ordering", ablation(ckpt));
  gate(2, "irrelevant-node robustness", node_sweep());
  gate(3, "robustness transfer", robustness(ckpt));
  gate(4, "flow correctness", flow_correctness());
  gate(5, "causal-mask soundness", mask_soundness());
  gate(6, "REINFORCE estimator", reinforce_toy());
  gate(7, "simulator determinism and physics", simulator_checks());
  report(8, "causal-graph likelihood probe", likelihood_probe_check(), false);

  fs::remove_all(dir);
  std::cout << (ok ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL") << std::endl;
  return ok ? 0 : 1;
}
