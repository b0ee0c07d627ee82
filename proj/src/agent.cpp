#include "causalaf/agent.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "causalaf/errors.hpp"
#include "causalaf/trainer.hpp"

namespace causalaf {

void AgentConfig::validate() const {
  if (sectors == 0 || hidden == 0) throw Error(ErrorCode::InvalidConfig, "agent network must be non-empty");
  if (!(action_std > 0.0)) throw Error(ErrorCode::InvalidConfig, "action_std must be > 0");
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidConfig, "agent learning_rate must be > 0");
  if (batch_size == 0) throw Error(ErrorCode::InvalidConfig, "agent batch_size must be > 0");
  if (decision_ticks < 1) throw Error(ErrorCode::InvalidConfig, "decision_ticks must be >= 1");
  if (!(reference_speed > 0.0)) throw Error(ErrorCode::InvalidConfig, "reference_speed must be > 0");
  if (!(baseline_decay >= 0.0 && baseline_decay < 1.0))
    throw Error(ErrorCode::InvalidConfig, "agent baseline_decay must lie in [0, 1)");
}

nlohmann::json to_json(const AgentConfig& c) {
  return {{"sectors", c.sectors},
          {"hidden", c.hidden},
          {"action_std", c.action_std},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"episodes", c.episodes},
          {"seed", c.seed},
          {"collision_penalty", c.collision_penalty},
          {"progress_weight", c.progress_weight},
          {"reference_speed", c.reference_speed},
          {"baseline_decay", c.baseline_decay},
          {"decision_ticks", c.decision_ticks}};
}

AgentConfig agent_config_from_json(const nlohmann::json& doc, AgentConfig c) {
  if (!doc.is_object()) throw Error(ErrorCode::ParseError, "agent config must be an object");
  try {
    c.sectors = doc.value("sectors", c.sectors);
    c.hidden = doc.value("hidden", c.hidden);
    c.action_std = doc.value("action_std", c.action_std);
    c.learning_rate = doc.value("learning_rate", c.learning_rate);
    c.batch_size = doc.value("batch_size", c.batch_size);
    c.episodes = doc.value("episodes", c.episodes);
    c.seed = doc.value("seed", c.seed);
    c.collision_penalty = doc.value("collision_penalty", c.collision_penalty);
    c.progress_weight = doc.value("progress_weight", c.progress_weight);
    c.reference_speed = doc.value("reference_speed", c.reference_speed);
    c.baseline_decay = doc.value("baseline_decay", c.baseline_decay);
    c.decision_ticks = doc.value("decision_ticks", c.decision_ticks);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("agent config: ") + e.what());
  }
  c.validate();
  return c;
}

DrivingAgent::DrivingAgent(const AgentConfig& cfg, double a_max) : cfg_(cfg), a_max_(a_max) {
  cfg_.validate();
  const std::size_t d = feature_size(), h = cfg_.hidden;
  params_.assign(h * d + h + h + 1, 0.0);
  Rng rng = Rng::derive(cfg_.seed, 0xa6e47ULL);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t k = 0; k < h * d; ++k) params_[k] = scale * rng.gaussian();
}

std::vector<double> DrivingAgent::features(const AvInput& input, const RadarConfig& radar) const {
  std::vector<double> x(feature_size(), 0.0);
  const std::size_t s = cfg_.sectors;
  for (const auto& det : input.detections) {
    if (det.kind == ObjectKind::TrafficLight) continue;
    const double u = (det.bearing + 0.5 * radar.fov) / radar.fov;
    const auto k = std::min(s - 1, static_cast<std::size_t>(std::max(0.0, u) * static_cast<double>(s)));
    x[k] = std::max(x[k], 1.0 - det.range / radar.range);
  }
  if (input.ego) {
    x[s] = input.ego->speed / cfg_.reference_speed;
    if (input.stop_line_x && input.light != LightPhase::Green) {
      const double d = *input.stop_line_x - (input.ego->x + 0.5 * input.ego->length);
      if (d > -0.5) x[s + 1] = std::clamp(1.0 - d / radar.range, 0.0, 1.0);
    }
  }
  return x;
}

double DrivingAgent::forward(const std::vector<double>& x, std::vector<double>* hidden) const {
  const std::size_t d = feature_size(), h = cfg_.hidden;
  const double* w1 = params_.data();
  const double* b1 = w1 + h * d;
  const double* w2 = b1 + h;
  const double b2 = w2[h];
  double u = b2;
  if (hidden) hidden->assign(h, 0.0);
  for (std::size_t r = 0; r < h; ++r) {
    double a = b1[r];
    for (std::size_t c = 0; c < d; ++c) a += w1[r * d + c] * x[c];
    const double t = std::tanh(a);
    if (hidden) (*hidden)[r] = t;
    u += w2[r] * t;
  }
  return u;
}

double DrivingAgent::mean_action(const std::vector<double>& x) const {
  return forward(x, nullptr);
}

std::vector<double> DrivingAgent::grad_log_prob(const std::vector<double>& x, double action) const {
  const std::size_t d = feature_size(), h = cfg_.hidden;
  std::vector<double> hid;
  const double mu = forward(x, &hid);
  const double du = (action - mu) / (cfg_.action_std * cfg_.action_std);

  std::vector<double> g(params_.size(), 0.0);
  const double* w2 = params_.data() + h * d + h;
  double* gw1 = g.data();
  double* gb1 = gw1 + h * d;
  double* gw2 = gb1 + h;
  gw2[h] = du;
  for (std::size_t r = 0; r < h; ++r) {
    gw2[r] = du * hid[r];
    const double da = du * w2[r] * (1.0 - hid[r] * hid[r]);
    gb1[r] = da;
    for (std::size_t c = 0; c < d; ++c) gw1[r * d + c] = da * x[c];
  }
  return g;
}

AgentEpisode DrivingAgent::run(const BehavioralGraph& bg, const ScenarioSpec& spec, Rng* rng) const {
  AgentEpisode ep;
  double held = 0.0;
  const AvOverride control = [&](const AvInput& input, const AvDecision& rule, int tick) {
    if (tick % cfg_.decision_ticks == 0) {
      AgentStep st;
      if (input.ego) st.position = input.ego->position();
      st.features = features(input, spec.radar);
      const double mu = mean_action(st.features);
      st.action = rng ? mu + cfg_.action_std * rng->gaussian() : mu;
      held = std::clamp(st.action, -a_max_, a_max_);
      ep.steps.push_back(std::move(st));
    }
    const double accel = input.ego && input.ego->speed >= input.ego->av.target_speed ? std::min(held, 0.0) : held;
    return Action{accel, rule.action.yaw_rate};
  };
  ep.trace = execute(bg, spec, false, control);
  ep.reward = agent_reward(ep.trace, spec, cfg_);
  return ep;
}

namespace {

double progress_norm(const ScenarioSpec& spec, const AgentConfig& cfg) {
  const double horizon = spec.max_step * spec.substeps * spec.dt;
  return cfg.reference_speed * (horizon > 0.0 ? horizon : 1.0);
}

std::optional<Vec2> final_av_position(const ScenarioTrace& trace) {
  if (trace.states.empty()) return std::nullopt;
  const auto k = trace.states.back().av_index();
  if (!k) return std::nullopt;
  return trace.states.back().objects[*k].position();
}

}  // namespace

std::vector<double> step_rewards(const AgentEpisode& ep, const ScenarioSpec& spec, const AgentConfig& cfg) {
  std::vector<double> r(ep.steps.size(), 0.0);
  if (r.empty()) return r;
  const double norm = progress_norm(spec, cfg);
  const auto end = final_av_position(ep.trace);
  for (std::size_t t = 0; t < r.size(); ++t) {
    const Vec2 next = t + 1 < r.size() ? ep.steps[t + 1].position : end.value_or(ep.steps[t].position);
    r[t] = cfg.progress_weight * (next - ep.steps[t].position).norm() / norm;
  }
  if (ep.trace.collided) r.back() -= cfg.collision_penalty;
  return r;
}

double agent_reward(const ScenarioTrace& trace, const ScenarioSpec& spec, const AgentConfig& cfg) {
  double progress = 0.0;
  for (std::size_t k = 1; k < trace.states.size(); ++k) {
    const auto a = trace.states[k - 1].av_index();
    const auto b = trace.states[k].av_index();
    if (a && b) progress += (trace.states[k].objects[*b].position() - trace.states[k - 1].objects[*a].position()).norm();
  }
  return cfg.progress_weight * progress / progress_norm(spec, cfg) - (trace.collided ? cfg.collision_penalty : 0.0);
}

AgentTrainResult train_agent(const ScenarioSpec& spec, const ScenarioSource& source, const AgentConfig& cfg) {
  cfg.validate();
  AgentTrainResult out{DrivingAgent(cfg, spec.av.a_max), {}, {}};
  DrivingAgent& agent = out.agent;
  Adam adam;
  adam.lr = cfg.learning_rate;
  // Per-decision baseline on the return-to-go.
  std::vector<double> baseline;
  std::vector<std::uint8_t> seen;

  for (std::size_t first = 0; first < cfg.episodes; first += cfg.batch_size) {
    const std::size_t count = std::min(cfg.batch_size, cfg.episodes - first);
    std::vector<AgentEpisode> batch;
    std::vector<std::vector<double>> returns;
    batch.reserve(count);
    for (std::size_t e = first; e < first + count; ++e) {
      Rng rng = Rng::derive(cfg.seed, e);
      const BehavioralGraph bg = source(rng);
      batch.push_back(agent.run(bg, spec, &rng));
      out.rewards.push_back(batch.back().reward);
      out.collisions.push_back(batch.back().trace.collided ? 1 : 0);
      auto g = step_rewards(batch.back(), spec, cfg);
      for (std::size_t t = g.size(); t-- > 1;) g[t - 1] += g[t];
      returns.push_back(std::move(g));
    }

    std::vector<double> sum(baseline.size(), 0.0);
    std::vector<double> n(baseline.size(), 0.0);
    for (const auto& g : returns) {
      if (g.size() > baseline.size()) {
        baseline.resize(g.size(), 0.0);
        seen.resize(g.size(), 0);
        sum.resize(g.size(), 0.0);
        n.resize(g.size(), 0.0);
      }
      for (std::size_t t = 0; t < g.size(); ++t) {
        sum[t] += g[t];
        n[t] += 1.0;
      }
    }
    for (std::size_t t = 0; t < baseline.size(); ++t)
      if (n[t] > 0.0 && !seen[t]) {
        baseline[t] = sum[t] / n[t];
        seen[t] = 1;
      }

    std::vector<double> grad(agent.params().size(), 0.0);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const auto& steps = batch[b].steps;
      const auto& g = returns[b];
      for (std::size_t t = 0; t < std::min(steps.size(), g.size()); ++t) {
        const double adv = g[t] - baseline[t];
        if (adv == 0.0) continue;
        const auto gl = agent.grad_log_prob(steps[t].features, steps[t].action);
        for (std::size_t k = 0; k < gl.size(); ++k) grad[k] += adv * gl[k];
      }
    }
    for (double& g : grad) g /= static_cast<double>(count);
    adam.step(agent.params(), grad);
    for (std::size_t t = 0; t < baseline.size(); ++t)
      if (n[t] > 0.0)
        baseline[t] = cfg.baseline_decay * baseline[t] + (1.0 - cfg.baseline_decay) * sum[t] / n[t];
  }
  return out;
}

double success_rate(const DrivingAgent& agent, const std::vector<BehavioralGraph>& scenarios,
                    const ScenarioSpec& spec) {
  if (scenarios.empty()) throw Error(ErrorCode::EmptyEvaluationSet, "no scenarios to evaluate on");
  std::size_t safe = 0;
  for (const auto& bg : scenarios)
    if (!agent.run(bg, spec, nullptr).trace.collided) ++safe;
  return static_cast<double>(safe) / static_cast<double>(scenarios.size());
}

BehavioralGraph random_bg(const ScenarioSpec& spec, Rng& rng) {
  const CausalGraph& cg = spec.cg;
  const FlowDims dims = scenario_dims(spec);
  BehavioralGraph bg(dims.m, dims.n, dims.h1, dims.h2);
  TypeCounts counts(cg.size(), 0);
  std::size_t i = 0;
  for (; i < dims.m; ++i) {
    const auto queue = valid_type_queue(cg, counts);
    if (queue.empty()) break;
    const TypeId t = queue.front();
    ++counts[t];
    bg.set_nodes(i + 1);
    bg.node(i)[t] = 1.0;
    auto e = bg.edge(i, i);
    e[static_cast<std::size_t>(EdgeKind::IndependentAction)] = 1.0;
    const auto role = spec.roles.find(cg.name(t));
    for (std::size_t k = 0; k < std::min<std::size_t>(4, dims.h2); ++k) {
      const Range r = role == spec.roles.end() ? Range{} : role->second.bounds[k];
      const double u = rng.uniform();
      e[dims.h1 + k] = r.hi > r.lo ? encode_attribute(r.lo + u * (r.hi - r.lo), r, spec.attribute_scale) : 0.0;
    }
  }
  return bg;
}

}  // namespace causalaf
